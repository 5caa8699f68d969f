use std::path::Path;
use std::process::{Command, Output};

const GAME: &str = r#"algorithm = "full_info"
max_iters = 50
tol = 1e-12
out_path = "game.csv"

[problem]
type = "block_game"
n_agents = 4
d = 2
r = 0.2
seed = 3

[graph]
n = 4
extra_edge_prob = 0.5
seed = 1

[alpha]
fixed = 0.5
"#;

fn dotdop(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dotdop"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn non_convergence_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("game.toml"), GAME).unwrap();
    let out = dotdop(&["run", "game.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let line = stdout(&out);
    assert!(line.starts_with("algorithm=full_info alpha=0.5 "), "{line}");
    assert!(line.contains(" iters=50 "));
    let csv = std::fs::read_to_string(dir.path().join("game.csv")).unwrap();
    assert_eq!(csv.lines().count(), 52);
}

#[test]
fn convergence_exits_with_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = GAME
        .replace("max_iters = 50", "max_iters = 100000")
        .replace("algorithm = \"full_info\"", "algorithm = \"dop\"");
    std::fs::write(dir.path().join("game.toml"), cfg).unwrap();
    let out = dotdop(
        &["run", "game.toml", "--alpha", "0.2", "--out", "sub/t.csv"],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join("sub/t.csv").exists());
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("bad.toml"),
        GAME.replace("full_info", "dot"),
    )
    .unwrap();
    let out = dotdop(&["run", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("dot") && err.contains("block_game"), "{err}");
    assert_eq!(
        dotdop(&["run", "missing.toml"], dir.path()).status.code(),
        Some(1)
    );
}

#[test]
fn stepsize_reports_the_bound() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("game.toml"),
        GAME.replace("fixed = 0.5", "auto_delta = 0.1"),
    )
    .unwrap();
    let out = dotdop(&["stepsize", "game.toml", "--kappa", "3"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let keys: Vec<_> = text.lines().map(|l| l.split_once('=').unwrap().0).collect();
    for k in [
        "rho1",
        "c1",
        "c4",
        "kappa_hat",
        "varpi",
        "theta5",
        "alpha_l",
        "alpha_max",
    ] {
        assert!(keys.contains(&k), "missing {k} in {text}");
    }
    assert!(text.contains("kappa=3\n"));
}

#[test]
fn graph_gen_writes_edge_list() {
    let dir = tempfile::tempdir().unwrap();
    let out = dotdop(
        &[
            "graph-gen",
            "--n",
            "6",
            "--p",
            "0.2",
            "--seed",
            "5",
            "--out",
            "g.txt",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let g = dotdop::network::DirectedGraph::read_edge_list(dir.path().join("g.txt")).unwrap();
    assert_eq!(g.n(), 6);
    assert!(dotdop::network::is_strongly_connected(&g));
    let again = dotdop(
        &["graph-gen", "--n", "6", "--p", "0.2", "--seed", "5"],
        dir.path(),
    );
    assert_eq!(stdout(&again), g.to_edge_list());
}

#[test]
fn km_on_a_single_scalar_agent_converges() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "algorithm = \"km\"\nmax_iters = 1000\ntol = 1e-10\nout_path = \"km.csv\"\n\n\
               [problem]\ntype = \"sum_quadratic\"\nN = 1\nn = 1\nxi = 0.5\n\n[alpha]\nauto_delta = 0.1\n";
    std::fs::write(dir.path().join("km.toml"), cfg).unwrap();
    let out = dotdop(&["run", "km.toml"], dir.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let line = stdout(&out);
    let fix: f64 = line
        .split(' ')
        .find_map(|kv| kv.strip_prefix("final_fix_dist="))
        .unwrap()
        .parse()
        .unwrap();
    assert!(fix <= 1e-10);
}

#[test]
fn complete_graph_has_no_disagreement_factor() {
    let dir = tempfile::tempdir().unwrap();
    let g = dotdop::network::DirectedGraph::complete(4).unwrap();
    g.write_edge_list(dir.path().join("k4.txt")).unwrap();
    let cfg = GAME
        .replace(
            "n = 4\nextra_edge_prob = 0.5\nseed = 1\n",
            "path = \"k4.txt\"\n",
        )
        .replace("fixed = 0.5", "auto_delta = 0.1");
    std::fs::write(dir.path().join("game.toml"), cfg).unwrap();
    let out = dotdop(&["stepsize", "game.toml"], dir.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout(&out);
    let get = |k: &str| -> f64 {
        text.lines()
            .find_map(|l| l.strip_prefix(&format!("{k}=")))
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!(get("rho1").abs() < 1e-12);
    let a = get("alpha_max");
    assert!(a > 0.0 && a < 1.0);
}
