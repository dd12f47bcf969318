mod common;

use std::sync::Arc;

use common::*;
use poslog::gen::{random_formula, random_grid, random_structure};
use poslog::io::{
    grid_from_json, grid_to_json, map_from_json, map_to_json, parse_formula_with, parse_rules, parse_structure, parse_theory,
    print_structure, ParseError, SourceFile,
};
use poslog::morphism::find_homomorphisms;
use poslog::morphism::StructureMap;
use proptest::prelude::*;
use rand::RngExt;

fn span_ok(e: &ParseError, src: &SourceFile) -> bool {
    e.start <= e.end && e.end <= src.text.len() && e.line >= 1 && e.col >= 1 && !e.message.is_empty()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn theories_round_trip(seed in any::<u64>()) {
        let mut r = rng(seed);
        let t = random_theory(&mut r, &rich(), 3);
        let text = t.to_string();
        let back = parse_theory(&SourceFile::new("t", text.as_str())).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(back, t);
    }

    #[test]
    fn formulas_round_trip(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sig = rich();
        let f = random_formula(&mut r, &sig, &xy(), shape(3));
        let text = f.to_string();
        let back = parse_formula_with(&SourceFile::new("f", text.as_str()), &sig, &xy())
            .map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(back, f);
    }

    #[test]
    fn structures_round_trip(seed in any::<u64>(), quoted in any::<bool>()) {
        let mut r = rng(seed);
        let sig = rich();
        let n = r.random_range(0..=4);
        // Constants and functions need a nonempty carrier.
        let mut m = if n == 0 {
            random_structure(&mut r, relational(), &[0], 0.4)
        } else {
            random_structure(&mut r, sig.clone(), &[n], 0.4)
        };
        if quoted {
            m = m.renamed(vec![(0..n).map(|i| format!("e {i}")).collect()]);
        }
        let text = print_structure(&m, "M");
        let back = parse_structure(&SourceFile::new("m", text.as_str()), m.signature_arc().clone())
            .map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(&back, &m);
        prop_assert_eq!(print_structure(&back, "M"), text);
    }

    #[test]
    fn maps_round_trip(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sig = relational();
        let a = sized(&mut r, &sig, 3, 0.3);
        let b = sized(&mut r, &sig, 3, 0.7);
        let mut maps = find_homomorphisms(&a, &b, &StructureMap::empty(&a), 4);
        maps.push(StructureMap::empty(&a));
        for f in maps {
            let v = map_to_json(&f, &a, &b);
            prop_assert_eq!(map_from_json(&v, &a, &b).unwrap(), f);
        }
    }

    #[test]
    fn grids_round_trip(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(1..=4);
        let g = random_grid(&mut r, n, 8, &[("P", 1), ("R", 2)]);
        let v = grid_to_json(&g);
        prop_assert_eq!(grid_from_json(&v, 8).unwrap(), g);
    }
}

const TOKENS: &[&str] = &[
    "sort", "elem", "rel", "const", "fun", "axiom", "forall", "exists", "structure", "true", "false", "rule", "subst", "=>", "->",
    "P", "R", "c", "f", "x", "y", "a0", "(", ")", "{", "}", ",", ".", ":", "=", "&", "|", ";", "\"", "#", "\n", " ", "é", "\u{0}",
];

/// Every parser returns a value or a spanned error, on random bytes and on
/// token soup close to valid input.
#[test]
fn parsers_are_total() {
    let sig = rich();
    let ssig = Arc::new((*sig).clone());
    let mut r = rng(10);
    for i in 0..100_000 {
        let bytes: Vec<u8> = if i % 2 == 0 {
            (0..r.random_range(0..40)).map(|_| r.random::<u8>()).collect()
        } else {
            (0..r.random_range(0..30))
                .map(|_| TOKENS[r.random_range(0..TOKENS.len())])
                .collect::<Vec<_>>()
                .join(if r.random_bool(0.5) { " " } else { "" })
                .into_bytes()
        };
        let src = match SourceFile::from_bytes("fuzz", &bytes) {
            Ok(s) => s,
            Err(e) => {
                assert!(e.line >= 1 && !e.message.is_empty());
                continue;
            }
        };
        let results = [
            parse_theory(&src).err(),
            parse_formula_with(&src, &sig, &xy()).err(),
            parse_structure(&src, ssig.clone()).err(),
            parse_rules(&src, &sig).err(),
        ];
        for e in results.into_iter().flatten() {
            assert!(span_ok(&e, &src), "bad span {e:?} for {:?}", src.text);
        }
    }
}
