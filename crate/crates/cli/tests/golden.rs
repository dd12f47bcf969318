mod common;

use std::fs;

use common::{golden_dir, render, run_case, CASES};

/// Compares every case with its golden file; `POSLOG_BLESS=1` rewrites them.
#[test]
fn golden_files() {
    let bless = std::env::var("POSLOG_BLESS").is_ok_and(|v| v == "1");
    let mut bad = Vec::new();
    for (name, args) in CASES {
        let (code, out) = run_case(args, 1);
        let got = render(code, &out);
        let path = golden_dir().join(format!("{name}.golden"));
        if bless {
            fs::write(&path, &got).unwrap();
            continue;
        }
        match fs::read_to_string(&path) {
            Ok(want) if want == got => {}
            Ok(want) => bad.push(format!("{name}: output differs\n--- want\n{want}--- got\n{got}")),
            Err(_) => bad.push(format!("{name}: missing {}", path.display())),
        }
    }
    assert!(bad.is_empty(), "{}", bad.join("\n"));
}

#[test]
fn thread_count_does_not_change_output() {
    for (name, args) in CASES.iter().filter(|(n, _)| n.starts_with("pc_") || n.starts_with("amalgamate") || n.starts_with("hom")) {
        let one = run_case(args, 1);
        let four = run_case(args, 4);
        assert_eq!(one, four, "{name}");
    }
}

#[test]
fn spec_exit_codes() {
    let code = |name: &str| {
        let (_, args) = CASES.iter().find(|(n, _)| *n == name).unwrap();
        run_case(args, 0)
    };
    assert_eq!(code("pc_singleton").0, 0);
    let (c, out) = code("amalgamate_span");
    assert_eq!(c, 2);
    assert!(out.contains("ground refutation"), "{out}");
    let (c, out) = code("qe_contradiction");
    assert_eq!(c, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["result"]["formula"], "false");
    assert_eq!(v["status"], "Holds");
}
