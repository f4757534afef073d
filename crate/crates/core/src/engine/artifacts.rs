//! Files written by a run: manifest, CSV reports, fields and meshes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::calibrate::Calibration;
use super::driver::{RunArtifacts, ITERATE_CSV_HEADER};
use super::exponents::{ledger_sweep, LEDGER_CSV_HEADER};
use crate::error::{Error, Result};
use crate::grid::io::{save_binary, write_csv};
use crate::grid::Embedding;
use crate::step::STEP_CSV_HEADER;

/// Measured constants of one iterate.
#[derive(Clone, Debug, Serialize)]
pub struct MeasuredConstants {
    pub q: usize,
    pub c_bar0: f64,
    pub c_bar1: f64,
    pub stage_c_dv0: f64,
    pub stage_c_dv1: f64,
    pub stage_c_v2: f64,
    pub stage_c_e0: f64,
    pub stage_c_e1: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CalibratedConstants {
    pub c0: Option<f64>,
    pub delta_star: Option<f64>,
    pub lambda_star: Option<f64>,
    pub s_max: f64,
    pub sigma1: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub n: usize,
    pub m: usize,
    pub resolution: usize,
    pub theta: f64,
    pub theta0: f64,
    pub alpha0: f64,
    pub beta0: f64,
    pub a0: f64,
    pub kappa: f64,
    pub b: f64,
    pub theta_final: f64,
    pub freq_scale: f64,
    pub skipped_iterates: usize,
    pub planned_iterations: usize,
    pub iterations_run: usize,
    pub iteration_cap: Option<String>,
    pub halted: Option<String>,
    pub initial_defect: f64,
    pub defects: Vec<f64>,
    pub calibration: CalibratedConstants,
    pub measured: Vec<MeasuredConstants>,
    pub cauchy_thetas: Vec<f64>,
    pub cauchy_ratios: Vec<Vec<f64>>,
    pub frame_pairing: &'static str,
    pub files: Vec<String>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn calibrated(run_smax: f64, c: Option<&Calibration>) -> CalibratedConstants {
    CalibratedConstants {
        c0: c.and_then(|c| c.c0),
        delta_star: c.and_then(|c| c.delta_star),
        lambda_star: c.and_then(|c| c.lambda_star),
        s_max: c.map_or(run_smax, |c| c.s_max),
        sigma1: c.map(|c| c.sigma1),
    }
}

/// Writes every artifact of `run` into `dir` and returns the manifest.
pub fn write_run(run: &RunArtifacts, dir: &Path) -> Result<Manifest> {
    std::fs::create_dir_all(dir)?;
    let s = &run.summary;
    let mut files = Vec::new();
    let mut put = |name: &str| -> PathBuf {
        files.push(name.to_string());
        dir.join(name)
    };

    let mut w = create(&put("iterates.csv"))?;
    writeln!(w, "{ITERATE_CSV_HEADER}")?;
    for r in &s.records {
        writeln!(w, "{}", r.csv_row())?;
    }
    w.flush()?;

    let mut w = create(&put("steps.csv"))?;
    writeln!(w, "q,step,{STEP_CSV_HEADER}")?;
    for r in &s.records {
        for (i, st) in r.stage.steps.iter().enumerate() {
            writeln!(w, "{},{},{}", r.q, i, st.csv_row())?;
        }
    }
    w.flush()?;

    let mut w = create(&put("schedule.csv"))?;
    writeln!(w, "j,theta,alpha,beta,ln_a,b,kappa")?;
    for l in &s.schedule.levels {
        writeln!(w, "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}", l.j, l.theta, l.alpha, l.beta, l.ln_a, l.b, l.kappa)?;
    }
    writeln!(w)?;
    writeln!(w, "q,ln_delta,ln_lambda")?;
    for sc in &s.schedule.scales {
        writeln!(w, "{},{:.17e},{:.17e}", sc.q, sc.ln_delta, sc.ln_lambda)?;
    }
    w.flush()?;

    run.profile.write_csv(create(&put("corrugation_profile.csv"))?)?;

    save_binary(&run.initial.values, &put("u_initial.bin"))?;
    save_binary(&run.final_state.u.values, &put("u_final.bin"))?;
    save_binary(&run.final_state.u.jacobian, &put("du_final.bin"))?;
    save_binary(&run.final_state.rho, &put("rho_final.bin"))?;
    write_csv(&run.final_state.u.values, create(&put("u_final.csv"))?)?;
    for (r, u) in s.records.iter().zip(&run.iterates) {
        save_binary(&u.values, &put(&format!("u_q{}.bin", r.q + 1)))?;
    }

    let manifest = Manifest {
        n: s.config.n,
        m: 2 * s.config.n,
        resolution: s.config.resolution,
        theta: s.config.theta,
        theta0: s.theta0,
        alpha0: s.config.alpha0,
        beta0: s.config.beta0,
        a0: s.a0,
        kappa: s.schedule.level0().kappa,
        b: s.schedule.level0().b,
        theta_final: s.schedule.theta_final,
        freq_scale: s.freq_scale,
        skipped_iterates: s.skipped_iterates,
        planned_iterations: s.planned_iterations,
        iterations_run: s.iterations_run,
        iteration_cap: s.iteration_cap.clone(),
        halted: s.halted.clone(),
        initial_defect: s.initial_defect,
        defects: s.records.iter().map(|r| r.defect).collect(),
        calibration: calibrated(s.config.s_max, s.calibration.as_ref()),
        measured: s
            .records
            .iter()
            .map(|r| MeasuredConstants {
                q: r.q,
                c_bar0: r.c_bar0,
                c_bar1: r.c_bar1,
                stage_c_dv0: r.stage.c_dv0,
                stage_c_dv1: r.stage.c_dv1,
                stage_c_v2: r.stage.c_v2,
                stage_c_e0: r.stage.c_e0,
                stage_c_e1: r.stage.c_e1,
            })
            .collect(),
        cauchy_thetas: s.config.cauchy_thetas.clone(),
        cauchy_ratios: s.cauchy_ratios.clone(),
        frame_pairing: "consecutive normal columns (2k, 2k+1) form each spiral pair",
        files: Vec::new(),
    };
    let mut manifest = manifest;
    files.push("manifest.json".into());
    manifest.files = files;
    let w = create(&dir.join("manifest.json"))?;
    serde_json::to_writer_pretty(w, &manifest).map_err(|e| Error::Io(e.to_string()))?;
    Ok(manifest)
}

/// Writes the `m`-point-per-axis ledger sweep for `n` as CSV and returns
/// `(cases, passing)`.
pub fn write_ledger_sweep(n: usize, m: usize, path: &Path) -> Result<(usize, usize)> {
    let cases = ledger_sweep(n, m)?;
    let mut w = create(path)?;
    writeln!(w, "{LEDGER_CSV_HEADER}")?;
    for c in &cases {
        writeln!(w, "{}", c.csv_row())?;
    }
    w.flush()?;
    Ok((cases.len(), cases.iter().filter(|c| c.passes()).count()))
}

/// Vertices and triangles of the surface through the first two axes (all other
/// coordinates at node 0). Each grid square gives two triangles; indices wrap.
pub fn surface_mesh(u: &Embedding<f64>, stride: usize) -> Result<(Vec<Vec<f64>>, Vec<[usize; 3]>)> {
    let res = u.resolution();
    if stride == 0 || res % stride != 0 {
        return Err(Error::InvalidField(format!("stride {stride} does not divide R = {res}")));
    }
    let k = res / stride;
    let vals = &u.values;
    let mut verts = Vec::with_capacity(k * k);
    for i in 0..k {
        for j in 0..k {
            let mut idx = vec![0; u.dim()];
            idx[0] = i * stride;
            idx[1] = j * stride;
            verts.push(vals.at(vals.node_index(&idx)).to_vec());
        }
    }
    let id = |i: usize, j: usize| (i % k) * k + (j % k);
    let mut faces = Vec::with_capacity(2 * k * k);
    for i in 0..k {
        for j in 0..k {
            faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    Ok((verts, faces))
}

/// ASCII PLY with vertex properties `x0..x{m-1}`.
pub fn write_ply<W: Write>(verts: &[Vec<f64>], faces: &[[usize; 3]], mut w: W) -> Result<()> {
    let m = verts.first().map_or(0, |v| v.len());
    writeln!(w, "ply\nformat ascii 1.0")?;
    writeln!(w, "comment torus embedding in R^{m}")?;
    writeln!(w, "element vertex {}", verts.len())?;
    for c in 0..m {
        writeln!(w, "property double x{c}")?;
    }
    writeln!(w, "element face {}", faces.len())?;
    writeln!(w, "property list uchar int vertex_indices\nend_header")?;
    for v in verts {
        let row: Vec<String> = v.iter().map(|x| format!("{x:.12e}")).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    for f in faces {
        writeln!(w, "3 {} {} {}", f[0], f[1], f[2])?;
    }
    Ok(())
}

/// OBJ of the orthogonal projection onto the first three coordinates.
pub fn write_obj<W: Write>(verts: &[Vec<f64>], faces: &[[usize; 3]], mut w: W) -> Result<()> {
    for v in verts {
        let c = |i: usize| v.get(i).copied().unwrap_or(0.0);
        writeln!(w, "v {:.12e} {:.12e} {:.12e}", c(0), c(1), c(2))?;
    }
    for f in faces {
        writeln!(w, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
    }
    Ok(())
}

/// Writes `<stem>.ply` and `<stem>.obj`.
pub fn export_mesh(u: &Embedding<f64>, stride: usize, stem: &Path) -> Result<(PathBuf, PathBuf)> {
    let (verts, faces) = surface_mesh(u, stride)?;
    let ply = stem.with_extension("ply");
    let obj = stem.with_extension("obj");
    let mut w = create(&ply)?;
    write_ply(&verts, &faces, &mut w)?;
    w.flush()?;
    let mut w = create(&obj)?;
    write_obj(&verts, &faces, &mut w)?;
    w.flush()?;
    Ok((ply, obj))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::product_torus;

    #[test]
    fn mesh_is_closed() {
        let u = product_torus::<f64>(2, 16, 0.9).unwrap();
        let (v, f) = surface_mesh(&u, 2).unwrap();
        assert_eq!(v.len(), 64);
        assert_eq!(f.len(), 128);
        // closed triangulated torus: every edge is shared by exactly two faces
        let mut edges = std::collections::HashMap::new();
        for t in &f {
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                *edges.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        assert!(edges.values().all(|&c| c == 2));
        assert_eq!(v.len() + f.len() - edges.len(), 0);
    }

    #[test]
    fn ply_header_names_every_coordinate() {
        let u = product_torus::<f64>(3, 8, 0.5).unwrap();
        let (v, f) = surface_mesh(&u, 1).unwrap();
        let mut buf = Vec::new();
        write_ply(&v, &f, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        for c in 0..6 {
            assert!(text.contains(&format!("property double x{c}\n")));
        }
        assert!(!text.contains("x6"));
    }
}
