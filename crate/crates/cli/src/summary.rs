//! Markdown tables and plot-data CSVs assembled from report JSONs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use flamefront_core::freeboundary::{doubling_constant, SUBQUADRATIC_EXPONENT};
use flamefront_core::regularity::RegularityReport;

use crate::artifacts::{write_text, AuditOutput, Document, SolveOutput, SweepOutput};
use crate::CliError;

/// Compact numeric formatting for tables.
fn num(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else if x.is_finite() && (1e-3..1e5).contains(&x.abs()) {
        format!("{x:.4}")
    } else {
        format!("{x:.3e}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_else(|| "n/a".into())
}

fn table(out: &mut String, header: &[&str], rows: &[Vec<String>]) {
    let _ = writeln!(out, "| {} |", header.join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(header.len()));
    for r in rows {
        let _ = writeln!(out, "| {} |", r.join(" | "));
    }
    out.push('\n');
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn uniform_bound(out: &mut String, reg: &RegularityReport) {
    let med = median(reg.per_eps.iter().map(|m| m.sup_norm).collect());
    let _ = writeln!(out, "## Uniform bound\n");
    let _ = writeln!(
        out,
        "Expected: sup u_ε bounded independently of ε. Measured Υ̂ = {}.\n",
        num(reg.upsilon_hat)
    );
    let rows: Vec<Vec<String>> = reg
        .per_eps
        .iter()
        .map(|m| {
            vec![
                num(m.eps),
                num(m.sup_norm),
                num(m.min_u),
                num(m.sup_norm / med),
                m.max_outer_iterations.to_string(),
                num(m.iteration_monotonicity_defect),
            ]
        })
        .collect();
    table(
        out,
        &["ε", "sup u", "min u", "sup / median", "max outer iterations", "iteration defect"],
        &rows,
    );
}

fn lipschitz(out: &mut String, reg: &RegularityReport) {
    let _ = writeln!(out, "## Lipschitz and time-Hölder seminorms on K\n");
    let _ = writeln!(
        out,
        "Expected: spatial Lipschitz seminorm bounded in ε (consecutive ratio near 1), time exponent at least 1/2. K: margin {}, {} nodes.\n",
        num(reg.compact.margin),
        reg.compact.nodes
    );
    let rows: Vec<Vec<String>> = reg
        .per_eps
        .iter()
        .enumerate()
        .map(|(j, m)| {
            vec![
                num(m.eps),
                num(m.lip_space),
                if j == 0 { "n/a".into() } else { opt(reg.lip_ratios.get(j - 1).copied()) },
                num(m.hoelder.c_hat),
                opt(m.hoelder.exponent),
                num(m.time_monotonicity_defect),
            ]
        })
        .collect();
    table(
        out,
        &["ε", "Lip_x", "ratio to previous ε", "time Hölder-1/2 constant", "time exponent", "time monotonicity defect"],
        &rows,
    );
}

fn limit(out: &mut String, reg: &RegularityReport) {
    let l = &reg.limit;
    let _ = writeln!(out, "## Limit ε → 0\n");
    let decreasing = reg.cauchy_residuals.windows(2).all(|w| w[1] < w[0]);
    let cauchy: Vec<String> = reg.cauchy_residuals.iter().map(|c| num(*c)).collect();
    let rows = vec![
        vec!["limit ε".into(), num(l.eps), "smallest ε of the sweep".into()],
        vec![
            "Cauchy residuals".into(),
            cauchy.join(", "),
            format!("decreasing ({})", if decreasing { "yes" } else { "no" }),
        ],
        vec!["sup u".into(), num(l.sup_norm), format!("≤ Υ̂ = {}", num(reg.upsilon_hat))],
        vec!["Lip_x".into(), num(l.lip_space), "finite".into()],
        vec!["time monotonicity defect".into(), num(l.time_monotonicity_defect), "0".into()],
        vec![
            format!("PDE residual where u > {}", num(l.pde_residual.threshold)),
            format!("{} over {} nodes", num(l.pde_residual.max), l.pde_residual.nodes),
            "O(h² + dt)".into(),
        ],
        vec![
            "near-front time exponent".into(),
            opt(l.near_front_hoelder.as_ref().and_then(|h| h.exponent)),
            "≥ 0.5".into(),
        ],
    ];
    table(out, &["quantity", "measured", "expected"], &rows);
}

fn nondegeneracy(out: &mut String, a: &AuditOutput) {
    let r = &a.report;
    let _ = writeln!(out, "## Non-degeneracy\n");
    let _ = writeln!(
        out,
        "Expected: sup over the parabolic boundary of Q⁻_r of (u - u(z)) / r² at least μ0 = {}, growth exponent 2. Status: {:?}.\n",
        num(r.mu0),
        r.nondegeneracy_status
    );
    let rows: Vec<Vec<String>> = r
        .slices
        .iter()
        .map(|s| {
            let n = &s.nondegeneracy;
            vec![
                num(s.t0),
                s.fb_points.len().to_string(),
                n.points.len().to_string(),
                n.skipped_points.to_string(),
                num(n.min_sup_ratio),
                num(n.min_inf_ratio),
                opt(n.exponent_median),
                format!("{} to {}", opt(n.exponent_min), opt(n.exponent_max)),
            ]
        })
        .collect();
    table(
        out,
        &["t0", "fb points", "audited", "skipped", "min sup ratio", "min inf ratio", "median exponent", "exponent range"],
        &rows,
    );
}

fn growth(out: &mut String, a: &AuditOutput) {
    let g = &a.report.growth;
    let _ = writeln!(out, "## Growth away from the free boundary\n");
    let rows = vec![
        vec!["Ĉ0 = max u / d²".into(), num(g.c0_hat), "finite".into()],
        vec![
            "envelope exponent".into(),
            num(g.exponent),
            format!("2 (flagged below {SUBQUADRATIC_EXPONENT})"),
        ],
        vec!["subquadratic flag".into(), g.subquadratic.to_string(), "false".into()],
        vec!["nodes used".into(), g.nodes_used.to_string(), String::new()],
        vec![
            "doubling ratio".into(),
            num(g.doubling_ratio),
            format!("≤ {}", num(doubling_constant(a.report.mu0))),
        ],
        vec!["ĉ1 (dyadic classes)".into(), num(a.report.c1_hat), String::new()],
    ];
    table(out, &["quantity", "measured", "expected"], &rows);
}

fn porosity(out: &mut String, a: &AuditOutput) {
    let r = &a.report;
    let _ = writeln!(out, "## Porosity of the free boundary\n");
    let _ = writeln!(
        out,
        "Expected: δ̂ ≥ predicted δ/2 = {} (κ = {}, M = {}). {}.\n",
        num(r.predicted_porosity),
        num(r.kappa),
        num(r.big_m),
        r.hausdorff_bound
    );
    let rows: Vec<Vec<String>> = r
        .slices
        .iter()
        .map(|s| {
            let (delta, fails, pairs) = match &s.porosity {
                Some(p) => (num(p.delta_hat), p.failures.to_string(), p.pairs.to_string()),
                None => ("n/a".into(), "0".into(), "0".into()),
            };
            let ball = match &s.ball_check {
                Some(b) => format!("{}/{} (premise {})", b.passed, b.pairs, b.premise_holds),
                None => "n/a".into(),
            };
            vec![num(s.t0), delta, num(r.predicted_porosity), fails, pairs, ball]
        })
        .collect();
    table(out, &["t0", "δ̂", "predicted δ/2", "failures", "pairs", "ball check passed"], &rows);
}

fn solve_table(out: &mut String, s: &SolveOutput, name: &str) {
    let _ = writeln!(out, "## Single solve ({name})\n");
    let rows = match (&s.diagnostics, &s.error) {
        (Some(d), _) => vec![vec![
            num(s.eps),
            num(d.sup_u),
            num(d.min_u),
            d.max_outer_iterations.to_string(),
            num(d.max_monotonicity_defect),
            num(d.max_residual),
        ]],
        (None, err) => vec![vec![
            num(s.eps),
            format!("failed: {}", err.as_deref().unwrap_or("unknown")),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
        ]],
    };
    table(
        out,
        &["ε", "sup u", "min u", "max outer iterations", "monotonicity defect", "max residual"],
        &rows,
    );
}

fn csv(path: &Path, header: &str, rows: &[String]) -> Result<(), CliError> {
    let mut text = String::from(header);
    text.push('\n');
    for r in rows {
        text.push_str(r);
        text.push('\n');
    }
    write_text(path, &text)
}

fn sweep_plots(dir: &Path, reg: &RegularityReport) -> Result<Vec<PathBuf>, CliError> {
    let sup: Vec<String> = reg
        .per_eps
        .iter()
        .map(|m| format!("{},{},{}", m.eps, m.sup_norm, m.min_u))
        .collect();
    let semi: Vec<String> = reg
        .per_eps
        .iter()
        .map(|m| {
            let e = m.hoelder.exponent.map(|x| x.to_string()).unwrap_or_default();
            format!("{},{},{},{}", m.eps, m.lip_space, m.hoelder.c_hat, e)
        })
        .collect();
    let a = dir.join("sup_vs_eps.csv");
    let b = dir.join("seminorms_vs_eps.csv");
    csv(&a, "eps,sup_u,min_u", &sup)?;
    csv(&b, "eps,lip_space,hoelder_c,hoelder_exponent", &semi)?;
    Ok(vec![a, b])
}

fn audit_plots(dir: &Path, a: &AuditOutput) -> Result<Vec<PathBuf>, CliError> {
    let grid_positions = |s: &flamefront_core::freeboundary::SliceAudit, node: usize| {
        s.fb_points
            .iter()
            .position(|&p| p == node)
            .map(|i| s.fb_positions[i])
            .unwrap_or([f64::NAN, f64::NAN])
    };
    let mut s_rows = Vec::new();
    let mut d_rows = Vec::new();
    for s in &a.report.slices {
        for p in &s.nondegeneracy.points {
            let x = grid_positions(s, p.point);
            for &(r, sup, inf) in &p.ratios {
                s_rows.push(format!("{},{},{},{},{},{},{}", s.t0, x[0], x[1], r, sup * r * r, sup, inf));
            }
        }
        if let Some(por) = &s.porosity {
            for &(r, d) in &por.per_radius {
                d_rows.push(format!("{},{},{}", s.t0, r, d));
            }
        }
    }
    let a_path = dir.join("s_of_r.csv");
    let b_path = dir.join("delta_vs_r.csv");
    csv(&a_path, "t0,x,y,r,S,sup_ratio,inf_ratio", &s_rows)?;
    csv(&b_path, "t0,r,delta_hat", &d_rows)?;
    Ok(vec![a_path, b_path])
}

/// Writes the markdown summary to `out` and plot CSVs beside it.
pub fn report(inputs: &[PathBuf], out: &Path) -> Result<(), CliError> {
    let mut solves: Vec<(String, SolveOutput)> = Vec::new();
    let mut sweeps: Vec<(String, SweepOutput)> = Vec::new();
    let mut audits: Vec<(String, AuditOutput)> = Vec::new();
    let mut missing = Vec::new();
    for path in inputs {
        if !path.exists() {
            eprintln!("flamefront: skipping missing input {}", path.display());
            missing.push(path.display().to_string());
            continue;
        }
        let name = path.display().to_string();
        match Document::load(path)? {
            Document::Solve(d) => solves.push((name, d)),
            Document::Sweep(d) => sweeps.push((name, d)),
            Document::Audit(d) => audits.push((name, d)),
        }
    }
    if solves.is_empty() && sweeps.is_empty() && audits.is_empty() {
        return Err(CliError::Input(format!("no readable report among {} inputs", inputs.len())));
    }

    let dir = out.parent().unwrap_or(Path::new("")).to_path_buf();
    let mut md = String::from("# flamefront summary\n\n");
    let mut plots = Vec::new();
    let mut provenance = Vec::new();
    for (name, d) in &solves {
        provenance.push((name.clone(), d.meta.clone()));
        solve_table(&mut md, d, name);
    }
    for (name, d) in &sweeps {
        provenance.push((name.clone(), d.meta.clone()));
        match &d.regularity {
            Some(reg) => {
                uniform_bound(&mut md, reg);
                lipschitz(&mut md, reg);
                limit(&mut md, reg);
                plots.extend(sweep_plots(&dir, reg)?);
            }
            None => {
                let _ = writeln!(
                    md,
                    "## Sweep ({name})\n\nfailed: {}\n",
                    d.error.as_deref().unwrap_or("unknown")
                );
            }
        }
    }
    for (name, d) in &audits {
        provenance.push((name.clone(), d.meta.clone()));
        nondegeneracy(&mut md, d);
        growth(&mut md, d);
        porosity(&mut md, d);
        plots.extend(audit_plots(&dir, d)?);
    }

    let _ = writeln!(md, "## Inputs\n");
    let rows: Vec<Vec<String>> = provenance
        .iter()
        .map(|(name, m)| {
            vec![
                name.clone(),
                format!("{:?}", m.kind),
                m.config_hash[..12.min(m.config_hash.len())].to_string(),
                m.git_describe.clone(),
                m.seed.to_string(),
            ]
        })
        .collect();
    table(&mut md, &["file", "kind", "config hash", "git describe", "seed"], &rows);
    if !missing.is_empty() {
        let _ = writeln!(md, "Skipped (missing): {}\n", missing.join(", "));
    }
    if !plots.is_empty() {
        let names: Vec<String> = plots
            .iter()
            .map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default())
            .collect();
        let _ = writeln!(md, "Plot data: {}\n", names.join(", "));
    }
    write_text(out, &md)
}
