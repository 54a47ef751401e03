use wgm_core::config::{ConfigError, RunConfig, Variant};
use wgm_core::mode::Polarization;

const BASE: &str = r#"{
    "geometry": {"variant": "coated_toroid", "R": "4um", "R_minor": "1 µm", "t": ["100nm", "0nm", "50nm"]},
    "materials": {
        "core": {"name": "silica", "n": 1.4564, "bulk_loss_db_per_cm": 1e-5},
        "coating": {"name": "SU-8", "n": 1.59, "bulk_loss_db_per_cm": 0.01},
        "exterior": {"name": "air", "n": 1.0},
        "eps_nv": 5.7
    },
    "target": {"wavelength": "637nm", "polarizations": ["TM", "TE"]}
}"#;

fn parse(text: &str) -> Result<RunConfig, ConfigError> {
    RunConfig::from_json_str(text)
}

fn edit(f: impl FnOnce(&mut serde_json::Value)) -> String {
    let mut v: serde_json::Value = serde_json::from_str(BASE).unwrap();
    f(&mut v);
    v.to_string()
}

#[test]
fn suffixes_are_normalized_to_metres() {
    let c = parse(BASE).unwrap();
    assert_eq!(c.geometry.variant, Variant::CoatedToroid);
    assert_eq!(c.geometry.radius.values(), vec![4e-6]);
    assert_eq!(c.minor_radius(), 1e-6);
    assert_eq!(c.geometry.coating.values(), vec![100e-9, 0.0, 50e-9]);
    assert_eq!(c.target.wavelength, 637e-9);
}

#[test]
fn sweep_points_are_sorted() {
    let c = parse(BASE).unwrap();
    let pts: Vec<(f64, Polarization)> = c.points().iter().map(|p| (p.coating, p.polarization)).collect();
    use Polarization::{QuasiTe as TE, QuasiTm as TM};
    assert_eq!(pts, vec![(0.0, TE), (0.0, TM), (50e-9, TE), (50e-9, TM), (100e-9, TE), (100e-9, TM)]);
    assert!(!c.is_scalar());
}

#[test]
fn unknown_keys_are_rejected() {
    let text = edit(|v| v["geometry"]["thickness"] = 1.0.into());
    let err = parse(&text).unwrap_err().to_string();
    assert!(err.contains("thickness"), "{err}");
    let text = edit(|v| v["solver"] = serde_json::json!({"resolution": {"cells": 3}}));
    assert!(parse(&text).unwrap_err().to_string().contains("cells"));
}

#[test]
fn missing_medium_is_named() {
    let text = edit(|v| {
        v["materials"].as_object_mut().unwrap().remove("coating");
    });
    let err = parse(&text).unwrap_err().to_string();
    assert!(err.contains("coating"), "{err}");
    let text = edit(|v| {
        v["materials"].as_object_mut().unwrap().remove("eps_nv");
    });
    assert!(parse(&text).unwrap_err().to_string().contains("eps_nv"));
}

#[test]
fn invalid_values_name_their_field() {
    let cases: [(fn(&mut serde_json::Value), &str); 6] = [
        (|v| v["geometry"]["t"] = serde_json::json!([]), "geometry.t"),
        (|v| v["geometry"]["R"] = serde_json::json!("-1um"), "geometry.R"),
        (|v| v["target"]["wavelength"] = 0.0.into(), "target.wavelength"),
        (|v| v["target"]["polarizations"] = serde_json::json!([]), "target.polarizations"),
        (|v| v["materials"]["eps_nv"] = (-2.0).into(), "materials.eps_nv"),
        (|v| v["solver"] = serde_json::json!({"workers": 0}), "solver.workers"),
    ];
    for (f, field) in cases {
        let err = parse(&edit(f)).unwrap_err();
        assert!(matches!(&err, ConfigError::Invalid { field: got, .. } if *got == field), "{field}: {err}");
    }
}

#[test]
fn variant_specific_rules() {
    let cyl = edit(|v| v["geometry"] = serde_json::json!({"variant": "cylinder", "R": "3um", "t": "10nm"}));
    assert!(parse(&cyl).is_err());
    let sph = edit(|v| v["geometry"] = serde_json::json!({"variant": "coated_sphere", "R": "5um", "R_minor": "1um"}));
    assert!(parse(&sph).is_err());
    let bare = edit(|v| v["geometry"] = serde_json::json!({"variant": "coated_sphere", "R": "5um"}));
    let c = parse(&bare).unwrap();
    assert_eq!(c.geometry.coating.values(), vec![0.0]);
    assert!(c.is_scalar());
}

#[test]
fn hash_covers_physics_only() {
    let a = parse(BASE).unwrap();
    let h = a.hash();
    assert_eq!(h.len(), 64);
    assert!(h.chars().all(|c| c.is_ascii_hexdigit()));
    let mut b = a.clone();
    b.solver.workers = 4;
    b.output.directory = "elsewhere".into();
    assert_eq!(b.hash(), h);
    let mut c = a.clone();
    c.solver.resolution_scale = 2.0;
    assert_ne!(c.hash(), h);
    let d = parse(&edit(|v| v["materials"]["eps_nv"] = 5.8.into())).unwrap();
    assert_ne!(d.hash(), h);
    assert_eq!(a.settings().eigen.seed, a.seed());
    assert_ne!(c.seed(), a.seed());
}

#[test]
fn refinement_scales_cell_counts() {
    let mut c = parse(BASE).unwrap();
    let base = c.settings();
    c.solver.resolution_scale = 2.0;
    let fine = c.settings();
    assert_eq!(fine.resolution.base_cells_per_wavelength, 2 * base.resolution.base_cells_per_wavelength);
    assert_eq!(fine.pml.thickness_cells, 2 * base.pml.thickness_cells);
}

#[test]
fn shipped_configs_parse() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            RunConfig::from_path(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 4);
}
