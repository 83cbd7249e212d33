use serde::Serialize;

/// Integer coefficients of `ad_A^p(μ) f = Σ_k α_k^p μ^{(2p-k)} f^{(k)}`, `A = -∂²`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AlphaTable {
    pub p: usize,
    pub alpha: Vec<i64>,
}

impl AlphaTable {
    /// Builds row `p` from `α_0^0 = 1` with
    /// `α_0^{p+1} = -α_0^p`, `α_{p+1}^{p+1} = -2α_p^p`,
    /// `α_k^{p+1} = -α_k^p - 2α_{k-1}^p`.
    pub fn new(p: usize) -> Self {
        let mut row = vec![1i64];
        for q in 0..p {
            let mut next = vec![0i64; q + 2];
            next[0] = -row[0];
            next[q + 1] = -2 * row[q];
            for k in 1..=q {
                next[k] = -row[k] - 2 * row[k - 1];
            }
            row = next;
        }
        AlphaTable { p, alpha: row }
    }

    /// `Σ_k (-1)^k α_k^p`, equal to one for every row.
    pub fn alternating_sum(&self) -> i64 {
        self.alpha
            .iter()
            .enumerate()
            .map(|(k, &a)| if k % 2 == 0 { a } else { -a })
            .sum()
    }

    pub fn get(&self, k: usize) -> i64 {
        self.alpha[k]
    }
}

/// Row `p` of the α-table.
pub fn alpha_coeffs(p: usize) -> AlphaTable {
    AlphaTable::new(p)
}
