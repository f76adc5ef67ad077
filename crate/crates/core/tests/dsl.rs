use num::BigRational;
use tptg::dsl::{self, gen_nonrepudiation, gen_taskgraph, parse, Variant};
use tptg::Error;

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn corpus() -> Vec<(String, String)> {
    let mut out = vec![("fig1".to_string(), dsl::FIG1.to_string())];
    for (k1, k2, p) in [(0, 0, q(0, 1)), (1, 1, q(1, 1)), (2, 2, q(1, 2)), (1, 0, q(1, 4)), (0, 2, q(3, 4)), (2, 1, q(1, 3))] {
        out.push((format!("taskgraph {k1} {k2} {p}"), gen_taskgraph(k1, k2, &p).unwrap().to_string()));
    }
    for (v, p) in [
        (Variant::Honest, q(1, 100)),
        (Variant::Honest, q(1, 10)),
        (Variant::Malicious1, q(1, 10)),
        (Variant::Malicious1, q(1, 1)),
        (Variant::Malicious2, q(1, 10)),
        (Variant::Malicious2, q(1, 2)),
    ] {
        out.push((format!("nonrep {v:?} {p}"), gen_nonrepudiation(v, &p).unwrap().to_string()));
    }
    out
}

#[test]
fn corpus_round_trips_and_compiles() {
    for (name, text) in corpus() {
        let a = parse(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        let b = parse(&a.to_string()).unwrap();
        assert_eq!(a, b, "{name}");
        let c = dsl::compile(&a).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(c.warnings.is_empty(), "{name}: {:?}", c.warnings);
    }
}

#[test]
fn fig1_shape() {
    let c = dsl::load(dsl::FIG1).unwrap();
    let m = &c.tptg;
    assert_eq!(m.locations.len(), 5);
    assert_eq!(m.clocks, ["x", "y"]);
    assert_eq!(m.players, ["sender", "medium"]);
    assert_eq!(m.max_constants(), [4, 24]);
    assert_eq!(c.props.len(), 4);
    assert_eq!(c.props[2].to_string(), "Emin [F done] price time coalition {sender, medium}");
    let medium = m.location_by_name("medium").unwrap();
    assert_eq!(m.players[m.locations[medium].owner], "medium");
}

#[test]
fn generated_models_have_the_expected_sizes() {
    let tg = dsl::compile(&gen_taskgraph(1, 1, &q(1, 1)).unwrap()).unwrap();
    assert_eq!(tg.tptg.clocks, ["u", "x1", "x2"]);
    assert_eq!(tg.tptg.price_names, ["time", "energy"]);
    assert!(tg.tptg.actions().contains("p1_fault"));
    let plain = dsl::compile(&gen_taskgraph(0, 0, &q(1, 1)).unwrap()).unwrap();
    assert!(!plain.tptg.actions().iter().any(|a| a.ends_with("fault")));
    let nr = dsl::compile(&gen_nonrepudiation(Variant::Honest, &q(1, 10)).unwrap()).unwrap();
    assert_eq!(nr.tptg.players, ["O", "R"]);
    assert_eq!(nr.props.len(), 2);
}

fn parse_error(text: &str) -> tptg::dsl::ParseError {
    match dsl::load(text) {
        Err(Error::Parse(e)) => e,
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn unsupported_constructs_are_explained() {
    let base = "player a;\nclock x, y;\nautomaton A {\n  init l;\n  location l {\n    ";
    let cases = [
        ("inv x < 2;", "strict inequalities not allowed (closed constraints)"),
        ("[go] x - y <= 1 -> l;", "diagonal constraints are not supported"),
        ("[go] -> {z} & l;", "unknown clock `z`"),
        ("urgent;", "`urgent` is an unsupported extension"),
    ];
    for (body, msg) in cases {
        let text = format!("{base}{body}\n  }}\n}}\n");
        let e = parse_error(&text);
        assert!(e.message.contains(msg), "{body}: {e}");
        assert_eq!(e.line, 6, "{body}");
    }
    let e = parse_error(&format!("{base}[go] -> {{z}} & l;\n  }}\n}}\n"));
    assert!(e.hint.contains("clock z;"));
}

#[test]
fn semantic_errors_carry_positions() {
    let text = "player a;\nautomaton A {\n  init l;\n  location l {\n    [go] -> 0.5 : l + 0.4 : l;\n  }\n}\nsystem A;\n";
    let e = parse_error(text);
    assert!(e.message.contains("9/10"), "{e}");
    assert_eq!(e.line, 5);
    let text = "player a;\nautomaton A {\n  var v : [0..1] init 0;\n  init l;\n  location l {\n    [go] -> (v := v + 1);\n  }\n}\nsystem A;\n";
    let text = text.replace("(v := v + 1)", "l & (v := v + 1)");
    assert!(parse_error(&text).message.contains("outside [0..1]"));
}

#[test]
fn unknown_coalition_members_are_rejected() {
    let text = dsl::FIG1.replace("coalition {sender}", "coalition {nobody}");
    assert!(dsl::load(&text).is_err());
}
