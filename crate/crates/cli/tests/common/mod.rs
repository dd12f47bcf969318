//! The golden-file suite shared by the golden and acceptance tests.

use std::path::{Path, PathBuf};
use std::process::Command;

/// Name and arguments of each golden case, run from the corpus directory.
pub const CASES: &[(&str, &[&str])] = &[
    ("check_consts", &["check", "distinct3.pth", "consts.pstruct"]),
    ("check_overlap", &["check", "disjointP.pth", "overlap.pstruct"]),
    ("check_partial", &["check", "distinct3.pth", "pure2.pstruct"]),
    ("find_distinct", &["find", "distinct3.pth", "--bound", "3"]),
    ("find_refuted", &["find", "disjointP.pth", "--fresh", "c", "--require", "P0(c) & P1(c)"]),
    ("entails_counter", &["entails", "disjointP.pth", "--sentence", "forall x. P0(x) -> exists y. P1(y)"]),
    ("entails_holds", &["entails", "disjointP_pc.pth", "--sentence", "forall x. P0(x) -> exists y. P1(y)", "--bound", "3"]),
    ("hom_all", &["hom", "empty.pth", "pure3.pstruct", "pure2.pstruct", "--all", "0"]),
    ("hom_constants", &["hom", "distinct3.pth", "plus1.pstruct", "consts.pstruct"]),
    ("iso_neq", &["iso", "neq.pth", "neq3.pstruct", "neq3.pstruct"]),
    ("iso_fails", &["iso", "empty.pth", "pure2.pstruct", "pure3.pstruct"]),
    ("immersion_include", &["immersion", "empty.pth", "singleton.pstruct", "pure2.pstruct", "include.json"]),
    ("immersion_collapse", &["immersion", "empty.pth", "pure2.pstruct", "singleton.pstruct", "collapse.json"]),
    ("pc_singleton", &["pc-check", "empty.pth", "singleton.pstruct", "--bound", "3"]),
    ("pc_pure2", &["pc-check", "empty.pth", "pure2.pstruct", "--bound", "3"]),
    ("pc_pure4", &["pc-check", "empty.pth", "pure4.pstruct", "--bound", "3"]),
    ("pc_consts", &["pc-check", "distinct3.pth", "consts.pstruct"]),
    ("pc_plus1", &["pc-check", "distinct3.pth", "plus1.pstruct"]),
    ("pc_explicit_pool", &["pc-check", "ed.pth", "ed.pstruct", "--pool-file", "ed.pool", "--bound", "3"]),
    ("obstruct_p0", &["obstruct", "disjointP.pth", "--formula", "P0(x)"]),
    ("obstruct_none", &["obstruct", "empty.pth", "--formula", "x = x", "--bound", "2"]),
    ("haykazyan_two_p", &["haykazyan", "disjointP.pth", "two_p.pstruct", "--subset", "u,v"]),
    ("jcp_two_p", &["jcp", "disjointP.pth", "two_p.pstruct", "two_p.pstruct", "--bound", "3"]),
    ("amalgamate_span", &["amalgamate", "distinct3.pth", "span.json", "--bound", "6"]),
    ("continue_plus1", &["continue", "distinct3.pth", "plus1.pstruct"]),
    ("continue_pure3", &["continue", "empty.pth", "pure3.pstruct", "--bound", "3"]),
    ("type_u", &["type", "disjointP.pth", "two_p.pstruct", "--tuple", "u", "--pool-depth", "1", "--pool-size", "6"]),
    ("type_explicit", &["type", "ed.pth", "ed.pstruct", "--tuple", "b3,b0", "--pool-file", "ed.pool"]),
    ("support_p0", &["support", "disjointP.pth", "two_p.pstruct", "--tuple", "u", "--formula", "P0(x)"]),
    ("support_params", &["support", "ed.pth", "ed.pstruct", "--tuple", "b1", "--params", "b2", "--formula", "D(x, p_b2)"]),
    (
        "dividing_holds",
        &["dividing", "neq.pth", "seq.json", "--phi", "x = y", "--x", "x", "--y", "y", "--psi", "D(y1, y2)", "--slot", "y1", "--slot", "y2", "--pool-depth", "1", "--pool-size", "8"],
    ),
    (
        "dividing_constant",
        &["dividing", "neq.pth", "seq_const.json", "--phi", "x = y", "--x", "x", "--y", "y", "--psi", "D(y1, y2)", "--slot", "y1", "--slot", "y2"],
    ),
    ("tp_holds", &["tp", "ed.pth", "tree.json", "--phi", "E(x, y)", "--x", "x", "--y", "y", "--psi", "D(y1, y2)", "--slot", "y1", "--slot", "y2"]),
    ("tp_fails", &["tp", "ed.pth", "tree_bad.json", "--phi", "E(x, y)", "--x", "x", "--y", "y", "--psi", "D(y1, y2)", "--slot", "y1", "--slot", "y2"]),
    ("op_staircase", &["op", "neq.pth", "op_a.json", "op_b.json", "--phi", "x = y", "--x", "x", "--y", "y", "--psi", "D(x, y)"]),
    ("rank_neq", &["rank", "neq.pth", "neq3.pstruct", "--phi", "x = y", "--x", "x", "--y", "y", "--psi", "D(x, y)", "--tree", "2"]),
    ("heq_lift", &["heq", "equiv.pth", "equiv4.pstruct", "--equiv", "E(x, y)", "--lift", "swap.json"]),
    ("heq_not_equivalence", &["heq", "neq.pth", "neq3.pstruct", "--equiv", "D(x, y)"]),
    ("union_chain", &["union", "empty.pth", "chain.json"]),
    ("normal_forms", &["normal", "disjointP.pth", "--formula", "exists y. (P0(y) | (P1(x) & exists z. P0(z)))"]),
    ("morleyise_qf", &["morleyise", "disjointP.pth"]),
    ("morleyise_depth", &["morleyise", "neq.pth", "--fragment", "depth=1"]),
    ("qe_contradiction", &["qe", "disjointP.pth", "--rules", "disjointP.rules", "--formula", "exists y. (P0(y) & P1(y))", "--verify", "4"]),
    ("qe_substitute", &["qe", "disjointP.pth", "--rules", "disjointP.rules", "--formula", "exists y. (y = x & P0(y))", "--verify", "4"]),
    ("qe_drop", &["qe", "disjointP_pc.pth", "--rules", "disjointP.rules", "--formula", "exists y. P0(y) & P1(x)", "--verify", "4"]),
    ("qe_wrong", &["qe", "disjointP.pth", "--rules", "disjointP.rules", "--formula", "exists y. P0(y)", "--verify", "2"]),
    ("c2p_grid", &["c2p", "grid.json", "--grid", "8", "--thresholds", "grid.thresholds", "--formula", "inf y. max(d(x,y), f(y))"]),
    ("c2p_dotminus", &["c2p", "grid.json", "--grid", "8", "--formula", "dotminus(f(x), 1/4)"]),
    ("error_bound_sort", &["pc-check", "empty.pth", "singleton.pstruct", "--bound", "foo=3"]),
    ("error_missing_file", &["check", "empty.pth", "nosuch.pstruct"]),
    ("error_parse", &["obstruct", "disjointP.pth", "--formula", "P0(x) &"]),
];

pub fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("golden")
}

/// Exit code and `--json` output of one case, with `POSLOG_THREADS` set.
pub fn run_case(args: &[&str], threads: usize) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_poslog"))
        .args(args)
        .arg("--json")
        .current_dir(corpus())
        .env("POSLOG_THREADS", threads.to_string())
        .output()
        .expect("the poslog binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8(out.stdout).expect("UTF-8 output"))
}

/// The golden file body: exit code line, then the report.
pub fn render(code: i32, stdout: &str) -> String {
    format!("exit: {code}\n{stdout}")
}
