//! Derivative-free Nelder–Mead minimisation with a fixed evaluation budget.

use crate::error::Result;

#[derive(Debug, Clone)]
pub(crate) struct NelderMeadOptions {
    pub max_evals: usize,
    /// Stop once `f_max − f_min` over the simplex drops below this.
    pub ftol: f64,
    /// Offset of the initial simplex vertices along each axis.
    pub step: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct NelderMeadResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
    /// Best value after each iteration.
    pub trace: Vec<f64>,
}

pub(crate) fn nelder_mead<F>(mut f: F, x0: &[f64], opts: &NelderMeadOptions) -> Result<NelderMeadResult>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let dim = x0.len();
    assert!(dim >= 1, "Nelder–Mead needs at least one coordinate");
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| -> Result<f64> {
        *evals += 1;
        f(x)
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    simplex.push((x0.to_vec(), eval(x0, &mut evals)?));
    for i in 0..dim {
        let mut x = x0.to_vec();
        x[i] += opts.step;
        let fx = eval(&x, &mut evals)?;
        simplex.push((x, fx));
    }

    let mut trace = Vec::new();
    let mut converged = false;
    loop {
        // Stable sort keeps ties in insertion order, so runs are reproducible.
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        trace.push(simplex[0].1);
        if simplex[dim].1 - simplex[0].1 < opts.ftol {
            converged = true;
            break;
        }
        if evals >= opts.max_evals {
            break;
        }

        let centroid: Vec<f64> =
            (0..dim).map(|j| simplex[..dim].iter().map(|(x, _)| x[j]).sum::<f64>() / dim as f64).collect();
        let along =
            |t: f64, worst: &[f64]| -> Vec<f64> { centroid.iter().zip(worst).map(|(c, w)| c + t * (c - w)).collect() };
        let worst = simplex[dim].0.clone();
        let (f_best, f_second, f_worst) = (simplex[0].1, simplex[dim - 1].1, simplex[dim].1);

        let xr = along(1.0, &worst);
        let fr = eval(&xr, &mut evals)?;
        if fr < f_best {
            let xe = along(2.0, &worst);
            let fe = eval(&xe, &mut evals)?;
            simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < f_second {
            simplex[dim] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < f_worst {
            let xc = along(0.5, &worst);
            let fc = eval(&xc, &mut evals)?;
            (xc, fc)
        } else {
            let xc = along(-0.5, &worst);
            let fc = eval(&xc, &mut evals)?;
            (xc, fc)
        };
        if fc < fr.min(f_worst) {
            simplex[dim] = (xc, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let x: Vec<f64> = best.iter().zip(&vertex.0).map(|(b, v)| b + 0.5 * (v - b)).collect();
            let fx = eval(&x, &mut evals)?;
            *vertex = (x, fx);
        }
    }
    let (x, f) = simplex.swap_remove(0);
    Ok(NelderMeadResult { x, f, evals, converged, trace })
}
