use std::path::Path;
use std::process::{Command, Output};

use kemeny::generators::{complete_bipartite, grid_graph};
use kemeny::io::write_matrix_market;
use kemeny::linalg::sparse::CsrMatrix;

fn kemeny(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kemeny")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, a: &CsrMatrix) -> String {
    let path = dir.join(name);
    write_matrix_market(&path, a).unwrap();
    path.to_string_lossy().into_owned()
}

fn uniform(n: usize) -> CsrMatrix {
    let t: Vec<_> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j, 1.0))).collect();
    CsrMatrix::from_triplets(n, n, &t).unwrap()
}

#[test]
fn uniform_chain_json() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "u.mtx", &uniform(100));
    let out = kemeny(&[&f, "--json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((v["kappa"].as_f64().unwrap() - 99.0).abs() < 1e-10);
    assert_eq!(v["n"], 100);
    assert_eq!(v["schema_version"], 1);
}

#[test]
fn every_method_on_a_small_graph() {
    let dir = tempfile::tempdir().unwrap();
    let mut t: Vec<_> = grid_graph(5, 6).iter().collect();
    t.extend([(0, 7, 1.0), (7, 0, 1.0)]);
    let f = write(dir.path(), "g.mtx", &CsrMatrix::from_triplets(30, 30, &t).unwrap());
    let kappa = |extra: &[&str]| {
        let mut args = vec![f.as_str(), "--csv"];
        args.extend_from_slice(extra);
        let out = kemeny(&args);
        assert!(out.status.success(), "{extra:?}: {}", String::from_utf8_lossy(&out.stderr));
        let text = stdout(&out);
        let row = text.lines().nth(1).unwrap().to_string();
        row.split(',').next().unwrap().parse::<f64>().unwrap()
    };
    let exact = kappa(&["--method", "direct"]);
    assert!((kappa(&["--method", "eig"]) - exact).abs() < 1e-8);
    for solver in ["lu", "gmres", "bicgstab"] {
        for split in ["half", "nd"] {
            let k = kappa(&["--method", "dnc", "--n0", "4", "--solver", solver, "--split", split, "--tol", "1e-12"]);
            assert!((k - exact).abs() < 1e-7 * exact, "{solver}/{split}: {k} vs {exact}");
        }
    }
    let k = kappa(&["--method", "hutchpp", "--normalize", "sym", "--samples", "90", "--eps", "0.05"]);
    assert!(k.is_finite());
}

#[test]
fn hutchpp_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "g.mtx", &grid_graph(12, 12));
    let args = [f.as_str(), "--method", "hutchpp", "--normalize", "sym", "--seed", "7", "--json"];
    let a = kemeny(&args);
    let b = kemeny(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn reducible_input_fails_without_flag() {
    let dir = tempfile::tempdir().unwrap();
    // K_{2,3} plus a disconnected edge.
    let mut t: Vec<_> = complete_bipartite(2, 3).iter().collect();
    t.extend([(5, 6, 1.0), (6, 5, 1.0)]);
    let f = write(dir.path(), "r.mtx", &CsrMatrix::from_triplets(7, 7, &t).unwrap());
    let out = kemeny(&[&f]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("2 strongly connected components"), "{err}");

    let out = kemeny(&[&f, "--largest-scc", "--json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["n"], 5);
    assert_eq!(v["largest_scc"]["original_n"], 7);
    assert_eq!(v["diagnostics"]["formula"], "bipartite");
}

#[test]
fn hutchpp_refuses_asymmetric_input() {
    let dir = tempfile::tempdir().unwrap();
    let t = [(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0), (0, 2, 1.0), (1, 1, 1.0)];
    let f = write(dir.path(), "d.mtx", &CsrMatrix::from_triplets(3, 3, &t).unwrap());
    let out = kemeny(&[&f, "--method", "hutchpp"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("reversible"));
}

#[test]
fn parse_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.mtx");
    std::fs::write(&path, "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n2 q 1\n").unwrap();
    let out = kemeny(&[path.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));
}

#[test]
fn thread_cap_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "u.mtx", &uniform(20));
    let out = Command::new(env!("CARGO_BIN_EXE_kemeny"))
        .args([f.as_str(), "--method", "dnc", "--n0", "2"])
        .env("KEMENY_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
    let out = Command::new(env!("CARGO_BIN_EXE_kemeny")).arg(&f).env("KEMENY_THREADS", "many").output().unwrap();
    assert!(!out.status.success());
}
