use lagrom::experiments::{linspace, uniform_params};
use lagrom::io::read_params_csv;
use lagrom::{Error, ParamSet, Result};

use crate::ParamArgs;

pub fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

fn parts(s: &str, n: usize, what: &str) -> Result<Vec<String>> {
    let p: Vec<String> = s.split(':').map(|x| x.trim().to_string()).collect();
    if p.len() != n {
        return Err(invalid(format!("{what} '{s}' must have {n} ':'-separated fields")));
    }
    Ok(p)
}

fn num(s: &str) -> Result<f64> {
    s.parse::<f64>().map_err(|_| invalid(format!("'{s}' is not a number")))
}

fn count(s: &str) -> Result<usize> {
    s.parse::<usize>().map_err(|_| invalid(format!("'{s}' is not a count")))
}

/// `a:b:n` into its three fields.
pub fn range(s: &str) -> Result<(f64, f64, usize)> {
    let p = parts(s, 3, "range")?;
    Ok((num(&p[0])?, num(&p[1])?, count(&p[2])?))
}

/// `a:b`.
pub fn interval(s: &str) -> Result<(f64, f64)> {
    let p = parts(s, 2, "interval")?;
    let (a, b) = (num(&p[0])?, num(&p[1])?);
    if !(b > a) {
        return Err(invalid(format!("interval '{s}' is empty")));
    }
    Ok((a, b))
}

/// `128` or `40x40`.
pub fn grid_points(s: &str) -> Result<Vec<usize>> {
    s.split('x').map(|p| count(p.trim())).collect()
}

/// Parameter set from whichever source was given; scalar sources use `name`.
pub fn resolve(a: &ParamArgs, name: &str, seed: u64) -> Result<ParamSet> {
    if let Some(g) = &a.param_grid {
        let (lo, hi, n) = range(g)?;
        if n == 0 {
            return Err(invalid("parameter grid needs at least one point"));
        }
        return ParamSet::scalar(name, &linspace(lo, hi, n));
    }
    if let Some(r) = &a.param_random {
        let (lo, hi, n) = range(r)?;
        if !(hi > lo) || n == 0 {
            return Err(invalid(format!("random parameter range '{r}' is empty")));
        }
        return ParamSet::scalar(name, &uniform_params(seed, lo, hi, n));
    }
    if let Some(v) = &a.mu {
        return ParamSet::scalar(name, v);
    }
    match &a.params_file {
        Some(path) => read_params_csv(path),
        None => Err(invalid("no parameters given")),
    }
}
