//! Whitespace-delimited data files for gnuplot, each with a commented header
//! saying which figure it reproduces and how to draw it.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use riotwave::equilibria::Region;

use crate::error::CliError;

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("file not found: {}: {e}", path.display())))
}

fn rows(text: &str) -> impl Iterator<Item = Vec<&str>> {
    text.lines().skip(1).filter(|l| !l.trim().is_empty()).map(|l| l.split(',').collect())
}

fn num(s: &str) -> Result<f64, CliError> {
    s.trim().parse().map_err(|_| CliError::Io(format!("malformed number `{s}`")))
}

const REGIONS: [Region; 6] = [Region::I, Region::IIa, Region::IIb, Region::IIIa, Region::IIIb, Region::OnBeta1];

fn region_code(name: &str) -> u8 {
    REGIONS.iter().find(|r| r.name() == name).map_or(0, |r| r.code())
}

/// Region-code matrix: one row per β, one column per ρ.
fn bifurcation(text: &str) -> Result<String, CliError> {
    let mut rho = Vec::new();
    let mut beta = Vec::new();
    let mut code = BTreeMap::new();
    for r in rows(text) {
        let (x, y) = (r[0].to_string(), r[1].to_string());
        if !rho.contains(&x) {
            rho.push(x.clone());
        }
        if !beta.contains(&y) {
            beta.push(y.clone());
        }
        code.insert((x, y), region_code(r[2].trim()).to_string());
    }
    let mut out = String::new();
    out.push_str("# figure: bifurcation diagram, region codes over the (rho, beta) plane\n");
    out.push_str("# codes: 0 failed, 1 I, 2 IIa, 3 IIb, 4 IIIa, 5 IIIb, 6 on beta_1\n");
    writeln!(out, "# rho axis: {}", rho.join(" ")).expect("string write");
    writeln!(out, "# beta axis: {}", beta.join(" ")).expect("string write");
    out.push_str("# recipe: plot 'bifurcation.dat' matrix with image\n");
    for b in &beta {
        let line: Vec<&str> = rho.iter().map(|r| code.get(&(r.clone(), b.clone())).map_or("0", String::as_str)).collect();
        writeln!(out, "{}", line.join(" ")).expect("string write");
    }
    Ok(out)
}

/// Space-time blocks, one per snapshot time, separated by blank lines.
fn space_time(text: &str, title: &str) -> Result<String, CliError> {
    let mut out = format!("# figure: {title}, one block per snapshot\n# columns: x t u [v]\n# recipe: splot 'FILE' using 1:2:3 with lines\n");
    let mut last_t: Option<String> = None;
    for r in rows(text) {
        if last_t.as_deref().is_some_and(|t| t != r[0]) {
            out.push('\n');
        }
        last_t = Some(r[0].to_string());
        let rest: Vec<&str> = r[2..].iter().map(|s| s.trim()).collect();
        writeln!(out, "{} {} {}", r[1].trim(), r[0].trim(), rest.join(" ")).expect("string write");
    }
    Ok(out)
}

fn columns(text: &str, header: &str) -> Result<String, CliError> {
    let mut out = header.to_string();
    for r in rows(text) {
        let cells: Vec<&str> = r.iter().map(|s| s.trim()).collect();
        writeln!(out, "{}", cells.join(" ")).expect("string write");
    }
    Ok(out)
}

fn gap(text: &str) -> Result<String, CliError> {
    let mut out = String::from(
        "# figure: gap crossing, verdict against gap width\n# columns: width crossed(1)/blocked(0)\n# recipe: plot 'gap_scan.dat' using 1:2 with steps\n",
    );
    for r in rows(text) {
        let crossed = u8::from(r[1].trim() == "crossed");
        writeln!(out, "{} {crossed}", num(r[0])?).expect("string write");
    }
    Ok(out)
}

/// Writes the plot file for each recognized output in `inputs`; unknown
/// outputs are skipped.
pub fn emit_plot_data(inputs: &[PathBuf], out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut written = Vec::new();
    for path in inputs {
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        let (target, body) = match name {
            "bifurcation.csv" => ("bifurcation.dat", bifurcation(&read(path)?)?),
            "snapshots.csv" => ("snapshots.dat", space_time(&read(path)?, "activity and tension profiles")?),
            "wave_profiles.csv" => ("wave_profiles.dat", space_time(&read(path)?, "traveling front profiles")?),
            "front_trace.csv" => (
                "front_trace.dat",
                columns(&read(path)?, "# figure: front position against time\n# columns: t x_f\n# recipe: plot 'front_trace.dat' with lines\n")?,
            ),
            "speed_vs_decay.csv" => (
                "speed_vs_decay.dat",
                columns(
                    &read(path)?,
                    "# figure: front speed against initial decay rate\n# columns: rate c r2 stderr class\n# recipe: plot 'speed_vs_decay.dat' using 1:2 with linespoints\n",
                )?,
            ),
            "gap_scan.csv" => ("gap_scan.dat", gap(&read(path)?)?),
            _ => {
                if !path.exists() {
                    return Err(CliError::Io(format!("file not found: {}", path.display())));
                }
                continue;
            }
        };
        let out = out_dir.join(target);
        fs::write(&out, body).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
        written.push(out);
    }
    Ok(written)
}
