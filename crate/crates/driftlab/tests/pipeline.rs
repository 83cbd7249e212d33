use driftlab::controls::ControlFamily;
use driftlab::designer::{design_mu, DesignSpec, Sign, DESIGN_CUTOFF};
use driftlab::fd_model::{a1k, FiniteModel, ModelSpec};
use driftlab::obstruction::{check_hypotheses, ObstructionReport};
use driftlab::pde_sim::{drift_experiment, normalise_drift, DriftSetup, GalerkinModel};
use driftlab::quadform::{coercivity_check, KernelH};
use driftlab::spectral::{DipoleMoment, DipoleSpec};
use driftlab::CouplingTable;

#[test]
fn dipole_spec_json_to_report() {
    let text = r#"{"kind": "polynomial", "coeffs": [-0.5, 1.0]}"#;
    let spec: DipoleSpec<f64> = serde_json::from_str(text).unwrap();
    let mu = DipoleMoment::try_from(spec).unwrap();
    let report = ObstructionReport::compute(&mu, 1, 1, 2000).unwrap();
    assert!((report.a[0] - 1.0).abs() < 1e-6);
    let v: serde_json::Value = serde_json::to_value(&report).unwrap();
    assert!(v["A"].is_array() && v["T_star"].is_number());

    let bad = r#"{"kind": "polynomial", "coeffs": [1.0], "extra": 0}"#;
    assert!(serde_json::from_str::<DipoleSpec<f64>>(bad).is_err());
}

#[test]
fn designed_dipole_survives_serialisation_and_drifts_with_its_sign() {
    let r = design_mu(&DesignSpec::new(2, 1, Sign::Minus).unwrap()).unwrap();
    assert!(r.converged);
    // what a user would save and reload
    let json = serde_json::to_string(&DipoleSpec::Bumps {
        bumps: r.bumps.clone(),
        max_order: None,
    })
    .unwrap();
    let mu = DipoleMoment::try_from(serde_json::from_str::<DipoleSpec<f64>>(&json).unwrap()).unwrap();
    let hyp = check_hypotheses(&mu, 2, 1, DESIGN_CUTOFF).unwrap();
    assert!(hyp.passes());
    assert!((hyp.a(1) + 1.0).abs() < 1e-6);

    let table = CouplingTable::build(&mu, 2, DESIGN_CUTOFF, 1).unwrap();
    let t_star = driftlab::obstruction::coercivity_constants(&table, 1).unwrap().t_star;
    let horizon = 0.5 * t_star;
    let v = ControlFamily::BumpModulated {
        omega: 0.0,
        order: 1,
        amplitude: 1.0,
    }
    .sample(horizon, 400)
    .unwrap();
    let kernel = KernelH::new(table, horizon).unwrap();
    assert!(coercivity_check(&kernel, 1, &v.iterated_primitive(1)).unwrap().pass);

    let v = normalise_drift(&mu, (2, 1, DESIGN_CUTOFF), &v, 1e-3, 1e-12).unwrap();
    let model = GalerkinModel::new(&mu, 400).unwrap();
    let setup = DriftSetup {
        k: 2,
        n: 1,
        cutoff: DESIGN_CUTOFF,
        substeps: 1,
    };
    let rep = drift_experiment(&model, &setup, &v, &[1e-3]).unwrap();
    let row = &rep.rows[0];
    // A < 0, so the lost direction moves up
    assert!(row.r > 0.0 && row.verdict);
    assert!((row.ratio() - 1.0).abs() < 0.1, "ratio {}", row.ratio());
}

#[test]
fn finite_model_round_trip() {
    let m = FiniteModel::demo();
    let text = serde_json::to_string(&m.spec()).unwrap();
    let back = FiniteModel::from_spec(&serde_json::from_str::<ModelSpec>(&text).unwrap()).unwrap();
    assert_eq!(a1k(&back, 2).unwrap(), 7.0);
    assert!(serde_json::from_str::<ModelSpec>(r#"{"h0": [[1.0]], "h1": [[0.0]], "h2": []}"#).is_err());
}
