use proptest::prelude::*;

use nlreg::config::parse_config;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![1.0001f64..50.0, (1u32..40).prop_map(|k| 1.0 + k as f64 / 8.0)]
}

proptest! {
    #[test]
    fn emit_parse_emit_is_identity(
        linear in any::<bool>(),
        g in finite(), kappa in finite(), ell in finite(), rho in finite(),
        lambda in 0.0f64..2.0, gamma in 1e-9f64..1e-2,
        amplitude in -5.0f64..5.0, omega0 in 0.1f64..4.0,
        tfinal in 0.5f64..200.0,
        dt in prop::option::of(1e-5f64..1e-2),
        values in prop::collection::btree_set(1u32..64, 1..5),
        eta_exact in any::<bool>(),
    ) {
        let name = if linear { "linear" } else { "vtol" };
        let dt = dt.map_or("auto".to_string(), |v| format!("{v:?}"));
        let values: Vec<String> = values.iter().map(|v| format!("{:?}", *v as f64 / 4.0)).collect();
        let text = format!(
            "scenario = {name}\n[scenario]\namplitude = {amplitude:?}\nomega0 = {omega0:?}\n\
             [gains]\ng = {g:?}\nkappa = {kappa:?}\nell = {ell:?}\nrho = {rho:?}\n\
             [identifier]\nlambda = {lambda:?}\ngamma_scale = {gamma:?}\n\
             [run]\ntfinal = {tfinal:?}\ndt = {dt}\n[initial]\neta_exact = {eta_exact}\n\
             [sweep]\nparameter = kappa\nvalues = {}\n",
            values.join(", ")
        );
        let cfg = parse_config(&text).unwrap();
        let emitted = cfg.emit();
        let again = parse_config(&emitted).unwrap();
        prop_assert_eq!(&again, &cfg);
        prop_assert_eq!(again.emit(), emitted);
    }

    #[test]
    fn parser_never_panics(text in "\\PC{0,200}") {
        let _ = parse_config(&text);
    }

    #[test]
    fn parser_never_panics_on_near_miss_lines(lines in prop::collection::vec(
        prop_oneof![
            Just("scenario = vtol".to_string()),
            Just("[gains]".to_string()),
            Just("[sweep]".to_string()),
            Just("[stabilizer]".to_string()),
            Just("[internal_model]".to_string()),
            "[a-z_]{1,12} = [-0-9.,; e]{0,16}",
        ],
        0..12,
    )) {
        let _ = parse_config(&lines.join("\n"));
    }
}

#[test]
fn errors_carry_line_numbers() {
    let cases = [
        ("scenario = vtol\n[gains]\ng = 0\n", 3, "g must be > 1"),
        ("scenario = vtol\n\n[internal_model]\nh = 1, -2\n", 4, "not Hurwitz"),
        ("scenario = vtol\n[run]\ntfinal = soon\n", 3, "not a number"),
        ("scenario = vtol\n[sweep]\nparameter = mass\nvalues = 1\n", 3, "unknown sweep parameter"),
        ("scenario = vtol\n[sweep]\nparameter = g\nvalues = 2, 1\n", 4, "strictly increasing"),
        ("scenario = rocket\n", 1, "unknown scenario"),
        ("g = 2\n", 1, "outside any section"),
        ("scenario = vtol\n[run]\ntail_fraction = 1.5\n", 3, "tail_fraction"),
    ];
    for (text, line, needle) in cases {
        let err = parse_config(text).unwrap_err();
        assert_eq!(err.line, Some(line), "{text:?}: {err}");
        assert!(err.message.contains(needle), "{text:?}: {err}");
    }
}

#[test]
fn missing_scenario_is_rejected() {
    let err = parse_config("[gains]\ng = 2\n").unwrap_err();
    assert!(err.message.contains("scenario name is required"));
}

#[test]
fn multi_chain_coefficients_use_semicolons() {
    let cfg = parse_config("scenario = vtol\n[stabilizer]\nc = 2, 4, 3 # faster\n").unwrap();
    assert_eq!(cfg.design.c, vec![vec![2.0, 4.0, 3.0]]);
    assert!(cfg.emit().contains("c = 2.0, 4.0, 3.0"));
    assert!(parse_config("scenario = vtol\n[stabilizer]\nc = 1, 3, 3; 1\n").is_err());
}
