//! Drive the command-line front end in-process on a small batch.
use std::io::Write;

fn main() -> std::io::Result<()> {
    let dir = std::env::temp_dir().join("rrf-green-example");
    std::fs::create_dir_all(&dir)?;
    let points = dir.join("points.csv");
    let mut f = std::fs::File::create(&points)?;
    writeln!(f, "x,y,z,theta,phi,theta0,phi0")?;
    writeln!(f, "0,0,-1,0,0,0,0")?;
    writeln!(f, "0.5,0,-1,,,0,0")?;
    writeln!(f, "0.5,0,0,0,0,0,0")?;
    let config = dir.join("run.cfg");
    std::fs::write(&config, "albedo = 0.5\nquad.csf.n_q = 10\n")?;
    let code = rrf_green::cli::run([
        "rrf-green",
        "eval",
        "--config",
        config.to_str().unwrap(),
        "--points",
        points.to_str().unwrap(),
        "--method",
        "csf",
    ]);
    eprintln!("exit code {code}");
    Ok(())
}
