use crate::symcore::{jacobian, Expr, SymMatrix};
use crate::sysmodel::{numeric_rank, sample_domain, AffineSystem};

use super::project::project_to;
use super::select::{select_rs, solve_p};
use super::{
    Invertibility, StepRecord, StructConfig, StructError, StructureOutcome, Variant, EXPR_BUDGET,
};
use crate::sysmodel::sample::sample_box;

pub fn classify_invertibility(rho_star: usize, m: usize, p: usize) -> Invertibility {
    if rho_star < m.min(p) {
        Invertibility::Degenerate
    } else if m == p {
        Invertibility::Invertible
    } else if m < p {
        Invertibility::LeftInvertible
    } else {
        Invertibility::RightInvertible
    }
}

pub fn infinite_zero_algorithm(
    sys: &AffineSystem,
    cfg: &StructConfig,
) -> Result<StructureOutcome, StructError> {
    run_structure(sys, cfg, Variant::InfiniteZero)
}

pub fn zero_output_algorithm(
    sys: &AffineSystem,
    cfg: &StructConfig,
) -> Result<StructureOutcome, StructError> {
    run_structure(sys, cfg, Variant::ZeroOutput)
}

/// `q`: each `j` repeated `ρ_j − ρ_{j−1}` times.
pub(crate) fn q_from_rho(rho: &[usize]) -> Vec<usize> {
    let mut q = Vec::new();
    let mut prev = 0;
    for (j, r) in rho.iter().enumerate() {
        q.extend(std::iter::repeat_n(j + 1, r - prev));
        prev = *r;
    }
    q
}

fn check_budget(exprs: &[Expr], step: usize) -> Result<(), StructError> {
    if exprs.iter().any(|e| e.size() > EXPR_BUDGET) {
        return Err(StructError::Budget { step });
    }
    Ok(())
}

pub fn run_structure(
    sys: &AffineSystem,
    cfg: &StructConfig,
    variant: Variant,
) -> Result<StructureOutcome, StructError> {
    let (n, m, p) = (sys.n(), sys.m(), sys.p());
    let vars = &sys.states;
    let tol = cfg.tol;
    let origin = vec![0.0; n];
    let mut warnings = Vec::new();
    let samples = match variant {
        Variant::InfiniteZero => sample_domain(&cfg.plan, sys)?,
        Variant::ZeroOutput => {
            if cfg.plan.points.is_some() {
                sample_domain(&cfg.plan, sys)?
            } else {
                sample_box(&cfg.plan, &sys.domain.scaled(0.1), sys)?
            }
        }
    };
    let full_points = |extra: Vec<Vec<f64>>| {
        let mut pts = vec![origin.clone()];
        pts.extend(extra);
        pts
    };

    let early = cfg.early_exit && {
        let pts = full_points(samples.clone());
        let dh = numeric_rank(&jacobian(&sys.h, vars), vars, &pts, tol)?;
        let g = numeric_rank(&sys.g, vars, &pts, tol)?;
        dh.constant && dh.rank == p && g.constant && g.rank == m
    };

    let mut theta = sys.h.clone();
    let mut constraints: Vec<Expr> = Vec::new();
    let mut omega: Vec<Expr> = Vec::new();
    let mut lf_omega: Vec<Expr> = Vec::new();
    let mut lg_omega = SymMatrix::zeros(0, m);
    let mut rho: Vec<usize> = Vec::new();
    let mut steps = Vec::new();
    let mut rho_prev = 0;
    let mut weighted = 0;

    for k in 1..=n.max(1) {
        let lf_theta = sys.lf(&theta);
        let lg_theta = sys.lg(&theta);
        check_budget(&lf_theta, k)?;
        check_budget(lg_theta.entries(), k)?;
        constraints.extend(theta.iter().cloned());
        let points = match variant {
            Variant::InfiniteZero => full_points(samples.clone()),
            Variant::ZeroOutput => {
                let proj = project_to(&constraints, vars, &samples, &sys.domain.scaled(0.5));
                if proj.is_empty() {
                    warnings.push(format!(
                        "step {k}: no sample projected onto M_{k}; rank checked at x=0 only"
                    ));
                }
                full_points(proj)
            }
        };
        let stack = lg_omega.vstack(&lg_theta);
        let rep = numeric_rank(&stack, vars, &points, tol)?;
        if !rep.constant {
            return Err(match variant {
                Variant::InfiniteZero => StructError::NotRegular {
                    step: k,
                    reason: format!(
                        "rank not constant across samples ({} of {} points differ from rank {} at x=0)",
                        rep.dissenting.len(),
                        points.len(),
                        rep.rank
                    ),
                },
                Variant::ZeroOutput => StructError::NotRegularAtOrigin { step: k },
            });
        }
        let rho_k = rep.rank;
        if rho_k < rho_prev {
            return Err(StructError::NotRegular {
                step: k,
                reason: "rank of L_gΩ dropped".into(),
            });
        }
        let (r_rows, s_rows) = select_rs(
            &lg_omega,
            &lg_theta,
            rho_k - rho_prev,
            vars,
            &points,
            tol,
            k,
        )?;
        for &i in &r_rows {
            omega.push(theta[i].clone());
            lf_omega.push(lf_theta[i].clone());
        }
        lg_omega = lg_omega.vstack(&lg_theta.select_rows(&r_rows));

        let c = lg_theta.select_rows(&s_rows);
        let (pk, p_method) = solve_p(&lg_omega, &c, vars, &points, tol)?;
        let w = (variant == Variant::ZeroOutput).then(|| c.sub(&pk.mul(&lg_omega)));
        let corr = pk.mul(&SymMatrix::column(lf_omega.clone()));
        let theta_k: Vec<Expr> = s_rows
            .iter()
            .enumerate()
            .map(|(r, &i)| (&lf_theta[i] - corr.get(r, 0)).simplify())
            .collect();
        check_budget(&theta_k, k)?;
        check_budget(pk.entries(), k)?;

        weighted += k * (rho_k - rho_prev);
        rho.push(rho_k);
        steps.push(StepRecord {
            k,
            rho: rho_k,
            lf_theta,
            lg_theta,
            r_rows,
            s_rows,
            omega: omega.clone(),
            p: pk,
            p_method,
            w,
            theta: theta_k.clone(),
            points: points.len(),
        });
        rho_prev = rho_k;
        theta = theta_k;

        let mut stop = k + weighted >= n || rho_k == m.min(p);
        if early && (m.max(p) + k + weighted).saturating_sub(rho_k + 1) >= n {
            stop = true;
        }
        if stop {
            break;
        }
    }

    let k_star = steps.len();
    let q = q_from_rho(&rho);
    let m_d = rho_prev;
    Ok(StructureOutcome {
        variant,
        n,
        m,
        p,
        h: sys.h.clone(),
        n_d: q.iter().sum(),
        q,
        k_star,
        m_d,
        invertibility: classify_invertibility(m_d, m, p),
        rho,
        steps,
        a: lf_omega,
        b: lg_omega,
        warnings,
    })
}
