use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::polynomial::Polynomial;
use crate::error::{Error, Result};

/// Role of a variable in a critical-point system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Variable {
    /// State-action frequency `η_{sa}`.
    Eta { state: usize, action: usize },
    /// Multiplier of the linear constraint of `state`.
    Lambda { state: usize },
    /// Multiplier of the reduced quadratic `p^o_{sa}`.
    Nu { observation: usize, state: usize, action: usize },
    /// Sign multiplier of `η_{sa} ≥ 0` at an anchor state.
    Kappa { state: usize, action: usize },
}

impl Variable {
    pub fn name(&self) -> String {
        match *self {
            Variable::Eta { state, action } => format!("eta[{state},{action}]"),
            Variable::Lambda { state } => format!("lambda[{state}]"),
            Variable::Nu { observation, state, action } => format!("nu[{observation};{state},{action}]"),
            Variable::Kappa { state, action } => format!("kappa[{state},{action}]"),
        }
    }

    fn parse(name: &str) -> Option<Variable> {
        let (head, rest) = name.split_once('[')?;
        let body = rest.strip_suffix(']')?;
        let nums = |s: &str| -> Option<Vec<usize>> {
            s.split([',', ';']).map(|t| t.trim().parse().ok()).collect()
        };
        let n = nums(body)?;
        match (head, n.as_slice()) {
            ("eta", [s, a]) => Some(Variable::Eta { state: *s, action: *a }),
            ("lambda", [s]) => Some(Variable::Lambda { state: *s }),
            ("nu", [o, s, a]) => Some(Variable::Nu { observation: *o, state: *s, action: *a }),
            ("kappa", [s, a]) => Some(Variable::Kappa { state: *s, action: *a }),
            _ => None,
        }
    }

    fn block(&self) -> u8 {
        match self {
            Variable::Eta { .. } => 0,
            Variable::Lambda { .. } => 1,
            Variable::Nu { .. } => 2,
            Variable::Kappa { .. } => 3,
        }
    }
}

/// Ordered, duplicate-free list of variables; the `η` block comes first,
/// followed by `λ`, `ν` and `κ`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VariableRegistry {
    vars: Vec<Variable>,
}

impl VariableRegistry {
    pub fn new(vars: Vec<Variable>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for v in &vars {
            if !seen.insert(*v) {
                return Err(Error::InvalidInput(format!("duplicate variable {}", v.name())));
            }
        }
        if vars.windows(2).any(|w| w[0].block() > w[1].block()) {
            return Err(Error::InvalidInput("variables must be ordered eta, lambda, nu, kappa".into()));
        }
        Ok(Self { vars })
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn get(&self, i: usize) -> Variable {
        self.vars[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Variable> {
        self.vars.iter()
    }

    pub fn names(&self) -> Vec<String> {
        self.vars.iter().map(Variable::name).collect()
    }

    pub fn index_of(&self, v: &Variable) -> Option<usize> {
        self.vars.iter().position(|w| w == v)
    }

    /// For every `(s, a)` (flattened), the index of its `η` variable, or
    /// `None` when that coordinate is fixed to zero.
    pub fn eta_map(&self, n_states: usize, n_actions: usize) -> Vec<Option<usize>> {
        let mut map = vec![None; n_states * n_actions];
        for (i, v) in self.vars.iter().enumerate() {
            if let Variable::Eta { state, action } = *v {
                map[state * n_actions + action] = Some(i);
            }
        }
        map
    }

    pub fn count(&self, pred: impl Fn(&Variable) -> bool) -> usize {
        self.vars.iter().filter(|v| pred(v)).count()
    }
}

/// A polynomial system over a variable registry.
#[derive(Debug, Clone, PartialEq)]
pub struct PolySystem {
    pub registry: VariableRegistry,
    pub equations: Vec<Polynomial>,
}

impl PolySystem {
    pub fn new(registry: VariableRegistry, equations: Vec<Polynomial>) -> Result<Self> {
        if let Some(p) = equations.iter().find(|p| p.nvars() != registry.len()) {
            return Err(Error::DimensionMismatch { expected: registry.len(), actual: p.nvars() });
        }
        Ok(Self { registry, equations })
    }

    pub fn n_vars(&self) -> usize {
        self.registry.len()
    }

    pub fn n_equations(&self) -> usize {
        self.equations.len()
    }

    pub fn is_square(&self) -> bool {
        self.n_vars() == self.n_equations()
    }

    /// Total degrees of the equations (0 for the zero polynomial).
    pub fn degrees(&self) -> Vec<u32> {
        self.equations.iter().map(|p| p.degree().unwrap_or(0)).collect()
    }

    /// Product of total degrees: the number of paths of a total-degree homotopy.
    pub fn bezout_number(&self) -> Result<u128> {
        if !self.is_square() {
            return Err(Error::NotSquare { equations: self.n_equations(), variables: self.n_vars() });
        }
        let mut product: u128 = 1;
        for (i, p) in self.equations.iter().enumerate() {
            let d = p
                .degree()
                .ok_or_else(|| Error::InvalidInput(format!("equation {i} is identically zero")))?;
            product = product.saturating_mul(d as u128);
        }
        Ok(product)
    }

    fn check_point(&self, point: &[Complex64]) -> Result<()> {
        if point.len() != self.n_vars() {
            return Err(Error::DimensionMismatch { expected: self.n_vars(), actual: point.len() });
        }
        Ok(())
    }

    pub fn evaluate(&self, point: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_point(point)?;
        Ok(self.equations.iter().map(|p| p.eval(point)).collect())
    }

    pub fn jacobian(&self, point: &[Complex64]) -> Result<DMatrix<Complex64>> {
        self.check_point(point)?;
        let n = self.n_vars();
        let mut j = DMatrix::zeros(self.n_equations(), n);
        for (i, p) in self.equations.iter().enumerate() {
            for v in 0..n {
                let d = p.derivative(v);
                if !d.is_zero() {
                    j[(i, v)] = d.eval(point);
                }
            }
        }
        Ok(j)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let names = self.registry.names();
        serde_json::json!({
            "variables": names,
            "equations": self.equations.iter().map(|p| polynomial_to_json(p, &names)).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        #[derive(Deserialize)]
        struct Dump {
            variables: Vec<String>,
            equations: Vec<Vec<TermJson>>,
        }
        let dump: Dump = serde_json::from_value(value.clone())?;
        let vars = dump
            .variables
            .iter()
            .map(|n| Variable::parse(n).ok_or_else(|| Error::InvalidInput(format!("bad variable name {n}"))))
            .collect::<Result<Vec<_>>>()?;
        let registry = VariableRegistry::new(vars)?;
        let index: BTreeMap<&str, usize> =
            dump.variables.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let n = registry.len();
        let equations = dump
            .equations
            .iter()
            .map(|terms| {
                let mut p = Polynomial::zero(n);
                for t in terms {
                    let mut e = vec![0; n];
                    for (name, &k) in &t.exponents {
                        let i = *index
                            .get(name.as_str())
                            .ok_or_else(|| Error::InvalidInput(format!("unknown variable {name}")))?;
                        e[i] = k;
                    }
                    p.add_term(e, Complex64::new(t.coefficient[0], t.coefficient[1]));
                }
                Ok(p)
            })
            .collect::<Result<Vec<_>>>()?;
        PolySystem::new(registry, equations)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TermJson {
    exponents: BTreeMap<String, u32>,
    coefficient: [f64; 2],
}

/// Sparse term list keyed by variable name, coefficients as `[re, im]`.
pub fn polynomial_to_json(p: &Polynomial, names: &[String]) -> serde_json::Value {
    let terms: Vec<TermJson> = p
        .terms()
        .map(|(e, c)| TermJson {
            exponents: e
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(i, &k)| (names[i].clone(), k))
                .collect(),
            coefficient: [c.re, c.im],
        })
        .collect();
    serde_json::to_value(terms).expect("term serialization cannot fail")
}
