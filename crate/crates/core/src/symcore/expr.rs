use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::ops;
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};
use std::sync::Arc;

use super::num::Num;

/// Variable name.
pub type Sym = Arc<str>;

static TERM_BUDGET: AtomicUsize = AtomicUsize::new(10_000);

/// Maximum number of terms a product expansion may produce before the
/// product is kept in factored form.
pub fn term_budget() -> usize {
    TERM_BUDGET.load(AtomicOrdering::Relaxed)
}

/// Sets the expansion budget and returns the previous value.
pub fn set_term_budget(n: usize) -> usize {
    TERM_BUDGET.swap(n, AtomicOrdering::Relaxed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
    Sign,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Sign => "sign",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "sign" => Func::Sign,
            _ => return None,
        })
    }

    pub fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Exp => v.exp(),
            Func::Sqrt => v.sqrt(),
            Func::Abs => v.abs(),
            Func::Sign => {
                if v > 0.0 {
                    1.0
                } else if v < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, PartialEq, Eq, Hash)]
pub enum Node {
    Num(Num),
    Var(Sym),
    /// At least two terms, no nested sums, like terms merged, sorted.
    Add(Vec<Expr>),
    /// Optional leading numeric coefficient followed by sorted factors with
    /// distinct bases.
    Mul(Vec<Expr>),
    /// Integer power of a non-numeric, non-product base.
    Pow(Expr, i64),
    Func(Func, Expr),
}

/// Immutable, shareable expression in canonical form.
///
/// Every constructor canonicalizes, so structural equality is the primary
/// equality; [`is_zero`](crate::symcore::is_zero) handles the cases where
/// canonical forms differ but the difference cancels after clearing
/// denominators.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Expr(Arc<Node>);

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

/// Compares names so that numeric runs order by value (`x2 < x10`).
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    let mut ai = a.chars().peekable();
    let mut bi = b.chars().peekable();
    loop {
        match (ai.peek().copied(), bi.peek().copied()) {
            (None, None) => return a.cmp(b),
            (None, Some(_)) => return Ordering::Less,
            (Some(_), None) => return Ordering::Greater,
            (Some(ca), Some(cb)) if ca.is_ascii_digit() && cb.is_ascii_digit() => {
                let mut da = String::new();
                while let Some(c) = ai.peek().copied().filter(char::is_ascii_digit) {
                    da.push(c);
                    ai.next();
                }
                let mut db = String::new();
                while let Some(c) = bi.peek().copied().filter(char::is_ascii_digit) {
                    db.push(c);
                    bi.next();
                }
                let ta = da.trim_start_matches('0');
                let tb = db.trim_start_matches('0');
                let ord = ta.len().cmp(&tb.len()).then_with(|| ta.cmp(tb));
                if ord != Ordering::Equal {
                    return ord;
                }
            }
            (Some(ca), Some(cb)) => {
                if ca != cb {
                    return ca.cmp(&cb);
                }
                ai.next();
                bi.next();
            }
        }
    }
}

fn kind_rank(n: &Node) -> u8 {
    match n {
        Node::Num(_) => 0,
        Node::Var(_) => 1,
        Node::Pow(..) => 2,
        Node::Mul(_) => 3,
        Node::Func(..) => 4,
        Node::Add(_) => 5,
    }
}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Expr {
    fn cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return Ordering::Equal;
        }
        let (a, b) = (self.node(), other.node());
        kind_rank(a).cmp(&kind_rank(b)).then_with(|| match (a, b) {
            (Node::Num(x), Node::Num(y)) => x.cmp(y),
            (Node::Var(x), Node::Var(y)) => natural_cmp(x, y),
            (Node::Pow(b1, e1), Node::Pow(b2, e2)) => b1.cmp(b2).then(e1.cmp(e2)),
            (Node::Mul(x), Node::Mul(y)) | (Node::Add(x), Node::Add(y)) => x.cmp(y),
            (Node::Func(f1, a1), Node::Func(f2, a2)) => f1.cmp(f2).then_with(|| a1.cmp(a2)),
            _ => Ordering::Equal,
        })
    }
}

impl Expr {
    fn raw(node: Node) -> Expr {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn num(n: Num) -> Expr {
        // a float zero is indistinguishable from an exact one in sums
        if n.is_float() && n.is_zero() {
            return Expr::raw(Node::Num(Num::ZERO));
        }
        Expr::raw(Node::Num(exact_unit(n)))
    }

    pub fn int(v: i128) -> Expr {
        Expr::num(Num::int(v))
    }

    pub fn rational(n: i128, d: i128) -> Expr {
        Expr::num(Num::ratio(n, d))
    }

    pub fn float(v: f64) -> Expr {
        Expr::num(Num::Float(v))
    }

    pub fn zero() -> Expr {
        Expr::num(Num::ZERO)
    }

    pub fn one() -> Expr {
        Expr::num(Num::ONE)
    }

    pub fn var(name: &str) -> Expr {
        Expr::raw(Node::Var(Arc::from(name)))
    }

    pub fn sym(name: &Sym) -> Expr {
        Expr::raw(Node::Var(name.clone()))
    }

    pub fn as_num(&self) -> Option<Num> {
        match self.node() {
            Node::Num(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_var(&self) -> Option<&Sym> {
        match self.node() {
            Node::Var(v) => Some(v),
            _ => None,
        }
    }

    /// Structural zero. See [`crate::symcore::is_zero`] for the semantic test.
    pub fn is_zero_literal(&self) -> bool {
        self.as_num().is_some_and(|n| n.is_zero())
    }

    pub fn is_one_literal(&self) -> bool {
        self.as_num().is_some_and(|n| n.is_one())
    }

    pub fn is_constant(&self) -> bool {
        self.free_vars().is_empty()
    }

    pub fn add_all(terms: impl IntoIterator<Item = Expr>) -> Expr {
        let mut acc: BTreeMap<Expr, Num> = BTreeMap::new();
        for t in terms {
            collect_term(&t, &mut acc);
        }
        let terms: Vec<Expr> = acc
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(m, c)| scale_mono(m, c))
            .collect();
        match terms.len() {
            0 => Expr::zero(),
            1 => terms.into_iter().next().unwrap(),
            _ => Expr::raw(Node::Add(terms)),
        }
    }

    pub fn mul_all(factors: impl IntoIterator<Item = Expr>) -> Expr {
        let mut coef = Num::ONE;
        let mut powers = BTreeMap::new();
        for f in factors {
            collect_factor(&f, 1, &mut coef, &mut powers);
        }
        finish_mul(coef, powers)
    }

    /// `self * Π base^k` where the extra powers are merged before any
    /// expansion, so negative powers in `self` cancel against them.
    pub fn mul_by_powers(&self, extra: &[(Expr, i64)]) -> Expr {
        let mut coef = Num::ONE;
        let mut powers = BTreeMap::new();
        collect_factor(self, 1, &mut coef, &mut powers);
        for (b, k) in extra {
            collect_factor(b, *k, &mut coef, &mut powers);
        }
        finish_mul(coef, powers)
    }

    pub fn pow(&self, k: i64) -> Expr {
        match k {
            0 => Expr::one(),
            1 => self.clone(),
            _ => {
                let mut coef = Num::ONE;
                let mut powers = BTreeMap::new();
                collect_factor(self, k, &mut coef, &mut powers);
                finish_mul(coef, powers)
            }
        }
    }

    pub fn recip(&self) -> Expr {
        self.pow(-1)
    }

    pub fn func(f: Func, arg: Expr) -> Expr {
        if let Some(n) = arg.as_num() {
            if let Some(v) = fold_func(f, n) {
                return v;
            }
            return Expr::raw(Node::Func(f, arg));
        }
        let lead = leading_coeff(&arg);
        if lead.is_negative() {
            let neg = -&arg;
            match f {
                Func::Sin | Func::Sign => return -Expr::func(f, neg),
                Func::Cos | Func::Abs => return Expr::func(f, neg),
                _ => {}
            }
        }
        match (f, arg.node()) {
            (Func::Abs, Node::Func(Func::Abs | Func::Exp, _)) => return arg,
            (Func::Abs, Node::Pow(_, k)) if k % 2 == 0 => return arg,
            (Func::Abs | Func::Sign, Node::Mul(fs)) if fs[0].as_num().is_some() => {
                let (c, mono) = split_coeff(&arg);
                let inner = Expr::func(f, mono);
                let factor = if f == Func::Abs {
                    c.abs()
                } else if c.is_negative() {
                    Num::int(-1)
                } else {
                    Num::ONE
                };
                return Expr::num(factor) * inner;
            }
            _ => {}
        }
        Expr::raw(Node::Func(f, arg))
    }

    pub fn sin(&self) -> Expr {
        Expr::func(Func::Sin, self.clone())
    }
    pub fn cos(&self) -> Expr {
        Expr::func(Func::Cos, self.clone())
    }
    pub fn exp(&self) -> Expr {
        Expr::func(Func::Exp, self.clone())
    }
    pub fn sqrt(&self) -> Expr {
        Expr::func(Func::Sqrt, self.clone())
    }
    pub fn abs(&self) -> Expr {
        Expr::func(Func::Abs, self.clone())
    }
    pub fn sign(&self) -> Expr {
        Expr::func(Func::Sign, self.clone())
    }

    /// Terms of a sum (a single-element slice view for non-sums).
    pub fn terms(&self) -> Vec<Expr> {
        match self.node() {
            Node::Add(ts) => ts.clone(),
            _ if self.is_zero_literal() => Vec::new(),
            _ => vec![self.clone()],
        }
    }

    /// Splits into numeric coefficient and the remaining monomial.
    pub fn split_coeff(&self) -> (Num, Expr) {
        split_coeff(self)
    }

    /// Rebuilds bottom-up through the canonicalizing constructors.
    pub fn simplify(&self) -> Expr {
        self.map_children(|c| c.simplify())
    }

    /// Applies `f` to each child and rebuilds this node.
    pub fn map_children(&self, mut f: impl FnMut(&Expr) -> Expr) -> Expr {
        match self.node() {
            Node::Num(_) | Node::Var(_) => self.clone(),
            Node::Add(ts) => Expr::add_all(ts.iter().map(&mut f)),
            Node::Mul(fs) => Expr::mul_all(fs.iter().map(&mut f)),
            Node::Pow(b, k) => f(b).pow(*k),
            Node::Func(g, a) => Expr::func(*g, f(a)),
        }
    }

    pub fn subs(&self, map: &HashMap<Sym, Expr>) -> Expr {
        if map.is_empty() {
            return self.clone();
        }
        match self.node() {
            Node::Var(v) => map.get(v).cloned().unwrap_or_else(|| self.clone()),
            Node::Num(_) => self.clone(),
            _ => self.map_children(|c| c.subs(map)),
        }
    }

    pub fn subs_var(&self, name: &str, value: &Expr) -> Expr {
        let mut m = HashMap::new();
        m.insert(Sym::from(name), value.clone());
        self.subs(&m)
    }

    pub fn free_vars(&self) -> BTreeSet<Sym> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Sym>) {
        match self.node() {
            Node::Num(_) => {}
            Node::Var(v) => {
                out.insert(v.clone());
            }
            Node::Add(xs) | Node::Mul(xs) => xs.iter().for_each(|x| x.collect_vars(out)),
            Node::Pow(b, _) => b.collect_vars(out),
            Node::Func(_, a) => a.collect_vars(out),
        }
    }

    /// Free variables in natural order.
    pub fn free_vars_sorted(&self) -> Vec<Sym> {
        let mut v: Vec<Sym> = self.free_vars().into_iter().collect();
        v.sort_by(|a, b| natural_cmp(a, b));
        v
    }

    pub fn contains_var(&self, name: &str) -> bool {
        match self.node() {
            Node::Num(_) => false,
            Node::Var(v) => &**v == name,
            Node::Add(xs) | Node::Mul(xs) => xs.iter().any(|x| x.contains_var(name)),
            Node::Pow(b, _) => b.contains_var(name),
            Node::Func(_, a) => a.contains_var(name),
        }
    }

    /// Node count.
    pub fn size(&self) -> usize {
        1 + match self.node() {
            Node::Num(_) | Node::Var(_) => 0,
            Node::Add(xs) | Node::Mul(xs) => xs.iter().map(Expr::size).sum(),
            Node::Pow(b, _) => b.size(),
            Node::Func(_, a) => a.size(),
        }
    }

    /// Evaluates with a variable lookup.
    pub fn eval_with(&self, lookup: &dyn Fn(&str) -> Option<f64>) -> Result<f64, EvalError> {
        Ok(match self.node() {
            Node::Num(n) => n.to_f64(),
            Node::Var(v) => lookup(v).ok_or_else(|| EvalError::UnboundVariable(v.to_string()))?,
            Node::Add(ts) => {
                let mut s = 0.0;
                for t in ts {
                    s += t.eval_with(lookup)?;
                }
                s
            }
            Node::Mul(fs) => {
                let mut p = 1.0;
                for f in fs {
                    p *= f.eval_with(lookup)?;
                }
                p
            }
            Node::Pow(b, k) => powi(b.eval_with(lookup)?, *k),
            Node::Func(f, a) => f.apply(a.eval_with(lookup)?),
        })
    }

    /// Evaluates with values bound positionally to `vars`.
    pub fn eval(&self, vars: &[Sym], x: &[f64]) -> Result<f64, EvalError> {
        let lookup = |name: &str| vars.iter().position(|v| &**v == name).map(|i| x[i]);
        self.eval_with(&lookup)
    }

    /// If `self = a0 + a1*v` with `a0`, `a1` free of `v`, returns `(a0, a1)`.
    pub fn affine_in(&self, v: &str) -> Option<(Expr, Expr)> {
        if !self.contains_var(v) {
            return Some((self.clone(), Expr::zero()));
        }
        let a1 = super::diff::diff(self, v);
        if a1.contains_var(v) {
            return None;
        }
        let a0 = self.subs_var(v, &Expr::zero());
        Some((a0, a1))
    }
}

pub(crate) fn powi(b: f64, k: i64) -> f64 {
    if let Ok(k) = i32::try_from(k) {
        b.powi(k)
    } else {
        b.powf(k as f64)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("non-finite value")]
    NonFinite,
}

fn fold_func(f: Func, n: Num) -> Option<Expr> {
    if let Num::Float(v) = n {
        return Some(Expr::float(f.apply(v)));
    }
    Some(match f {
        Func::Sin if n.is_zero() => Expr::zero(),
        Func::Cos | Func::Exp if n.is_zero() => Expr::one(),
        Func::Sqrt => Expr::num(n.exact_sqrt()?),
        Func::Abs => Expr::num(n.abs()),
        Func::Sign => Expr::int(if n.is_zero() {
            0
        } else if n.is_negative() {
            -1
        } else {
            1
        }),
        _ => return None,
    })
}

fn split_coeff(e: &Expr) -> (Num, Expr) {
    match e.node() {
        Node::Num(n) => (*n, Expr::one()),
        Node::Mul(fs) => match fs[0].as_num() {
            Some(c) => {
                let rest = if fs.len() == 2 {
                    fs[1].clone()
                } else {
                    Expr::raw(Node::Mul(fs[1..].to_vec()))
                };
                (c, rest)
            }
            None => (Num::ONE, e.clone()),
        },
        _ => (Num::ONE, e.clone()),
    }
}

fn leading_coeff(e: &Expr) -> Num {
    match e.node() {
        Node::Add(ts) => split_coeff(&ts[0]).0,
        _ => split_coeff(e).0,
    }
}

/// Float ±1 coefficients collapse to exact ones so rendering round-trips.
fn exact_unit(c: Num) -> Num {
    match c {
        Num::Float(v) if v == -1.0 => Num::int(-1),
        Num::Float(v) if v == 1.0 => Num::ONE,
        _ => c,
    }
}

fn scale_mono(mono: Expr, c: Num) -> Expr {
    let c = exact_unit(c);
    if mono.is_one_literal() {
        return Expr::num(c);
    }
    if c.is_one() {
        return mono;
    }
    let mut fs = vec![Expr::num(c)];
    match mono.node() {
        Node::Mul(xs) => fs.extend(xs.iter().cloned()),
        _ => fs.push(mono.clone()),
    }
    Expr::raw(Node::Mul(fs))
}

fn collect_term(t: &Expr, acc: &mut BTreeMap<Expr, Num>) {
    match t.node() {
        Node::Add(ts) => ts.iter().for_each(|x| collect_term(x, acc)),
        _ => {
            let (c, m) = split_coeff(t);
            let slot = acc.entry(m).or_insert(Num::ZERO);
            *slot = slot.add(c);
        }
    }
}

/// Divides a canonical sum by its leading coefficient.
fn normalize_sum(e: &Expr) -> (Num, Expr) {
    let c = leading_coeff(e);
    if c.is_one() || c.is_zero() {
        return (Num::ONE, e.clone());
    }
    let inv = c.recip();
    let scaled = match e.node() {
        Node::Add(ts) => Expr::add_all(ts.iter().map(|t| {
            let (tc, m) = split_coeff(t);
            scale_mono(m, tc.mul(inv))
        })),
        _ => unreachable!("normalize_sum on a non-sum"),
    };
    (c, scaled)
}

fn collect_factor(e: &Expr, k: i64, coef: &mut Num, powers: &mut BTreeMap<Expr, i64>) {
    match e.node() {
        Node::Num(n) => *coef = coef.mul(n.powi(k)),
        Node::Mul(fs) => fs.iter().for_each(|f| collect_factor(f, k, coef, powers)),
        Node::Pow(b, j) => collect_factor(b, j * k, coef, powers),
        Node::Add(_) => {
            let (c, s) = normalize_sum(e);
            if !c.is_one() {
                *coef = coef.mul(c.powi(k));
            }
            *powers.entry(s).or_insert(0) += k;
        }
        _ => *powers.entry(e.clone()).or_insert(0) += k,
    }
}

fn finish_mul(mut coef: Num, mut powers: BTreeMap<Expr, i64>) -> Expr {
    if coef.is_zero() {
        return Expr::zero();
    }
    // sqrt(u)^2 = u, abs(u)^(2k) = u^(2k)
    for _ in 0..8 {
        let special: Vec<(Expr, i64)> = powers
            .iter()
            .filter(|(b, e)| match b.node() {
                Node::Func(Func::Sqrt, _) => e.abs() >= 2,
                Node::Func(Func::Abs, _) => **e != 0 && **e % 2 == 0,
                _ => false,
            })
            .map(|(b, e)| (b.clone(), *e))
            .collect();
        if special.is_empty() {
            break;
        }
        for (b, e) in special {
            powers.remove(&b);
            match b.node() {
                Node::Func(Func::Sqrt, u) => {
                    let (q, r) = (e.div_euclid(2), e.rem_euclid(2));
                    if r != 0 {
                        *powers.entry(b.clone()).or_insert(0) += r;
                    }
                    collect_factor(u, q, &mut coef, &mut powers);
                }
                Node::Func(Func::Abs, u) => collect_factor(u, e, &mut coef, &mut powers),
                _ => unreachable!(),
            }
        }
    }
    if coef.is_zero() {
        return Expr::zero();
    }
    powers.retain(|_, e| *e != 0);
    cancel_sum_factors(&mut coef, &mut powers);

    let sums: Vec<(Expr, i64)> = powers
        .iter()
        .filter(|(b, e)| **e > 0 && matches!(b.node(), Node::Add(_)))
        .map(|(b, e)| (b.clone(), *e))
        .collect();
    if sums.is_empty() {
        return build_mul(coef, powers);
    }
    let budget = term_budget();
    let mut projected: usize = 1;
    for (s, k) in &sums {
        let n = s.terms().len();
        for _ in 0..*k {
            projected = projected.saturating_mul(n);
        }
    }
    if projected > budget {
        return build_mul(coef, powers);
    }
    for (s, _) in &sums {
        powers.remove(s);
    }
    let mut terms = vec![build_mul(coef, powers)];
    for (s, k) in &sums {
        let sterms = s.terms();
        for _ in 0..*k {
            let mut next = Vec::with_capacity(terms.len() * sterms.len());
            for t in &terms {
                for st in &sterms {
                    next.push(Expr::mul_all([t.clone(), st.clone()]));
                }
            }
            terms = next;
        }
    }
    Expr::add_all(terms)
}

thread_local! {
    static DIV_DEPTH: std::cell::Cell<u32> = const { std::cell::Cell::new(0) };
}

/// Cancels `S^j * B^-k` when the sum `B` divides the sum `S` exactly.
fn cancel_sum_factors(coef: &mut Num, powers: &mut BTreeMap<Expr, i64>) {
    let is_sum = |b: &Expr| matches!(b.node(), Node::Add(_));
    if !powers.iter().any(|(b, e)| *e < 0 && is_sum(b))
        || !powers.iter().any(|(b, e)| *e > 0 && is_sum(b))
    {
        return;
    }
    if DIV_DEPTH.with(|d| d.get()) >= 2 {
        return;
    }
    DIV_DEPTH.with(|d| d.set(d.get() + 1));
    loop {
        let dens: Vec<Expr> = powers
            .iter()
            .filter(|(b, e)| **e < 0 && is_sum(b))
            .map(|(b, _)| b.clone())
            .collect();
        let nums: Vec<Expr> = powers
            .iter()
            .filter(|(b, e)| **e > 0 && is_sum(b))
            .map(|(b, _)| b.clone())
            .collect();
        let mut hit = None;
        'search: for s in &nums {
            for d in &dens {
                if let Some(q) = poly_div(s, d) {
                    hit = Some((s.clone(), d.clone(), q));
                    break 'search;
                }
            }
        }
        let Some((s, d, q)) = hit else { break };
        *powers.get_mut(&s).unwrap() -= 1;
        *powers.get_mut(&d).unwrap() += 1;
        collect_factor(&q, 1, coef, powers);
        powers.retain(|_, e| *e != 0);
    }
    DIV_DEPTH.with(|d| d.set(d.get() - 1));
}

fn mono_powers(t: &Expr) -> (Num, BTreeMap<Expr, i64>) {
    let (c, m) = split_coeff(t);
    let mut map = BTreeMap::new();
    let mut put = |f: &Expr| match f.node() {
        Node::Pow(b, k) => {
            map.insert(b.clone(), *k);
        }
        Node::Num(_) => {}
        _ => {
            map.insert(f.clone(), 1);
        }
    };
    match m.node() {
        Node::Mul(fs) => fs.iter().for_each(&mut put),
        _ => put(&m),
    }
    (c, map)
}

fn lex_cmp(a: &BTreeMap<Expr, i64>, b: &BTreeMap<Expr, i64>) -> Ordering {
    let keys: BTreeSet<&Expr> = a.keys().chain(b.keys()).collect();
    for k in keys {
        let (x, y) = (
            a.get(k).copied().unwrap_or(0),
            b.get(k).copied().unwrap_or(0),
        );
        if x != y {
            return x.cmp(&y);
        }
    }
    Ordering::Equal
}

fn leading(e: &Expr) -> Option<(Num, BTreeMap<Expr, i64>)> {
    e.terms()
        .iter()
        .map(mono_powers)
        .max_by(|a, b| lex_cmp(&a.1, &b.1))
}

/// Exact quotient `s / b` of two sums under a lex order on atoms; `None`
/// when the division leaves a remainder or floats are involved.
fn poly_div(s: &Expr, b: &Expr) -> Option<Expr> {
    let has_float = |e: &Expr| e.terms().iter().any(|t| split_coeff(t).0.is_float());
    if has_float(s) || has_float(b) {
        return None;
    }
    let (bc, bm) = leading(b)?;
    let mut r = s.clone();
    let mut q = Vec::new();
    for _ in 0..(8 + 4 * s.terms().len()) {
        if r.is_zero_literal() {
            return Some(Expr::add_all(q));
        }
        let (rc, mut rm) = leading(&r)?;
        for (a, e) in &bm {
            let have = rm.get(a).copied().unwrap_or(0);
            if have < *e {
                return None;
            }
            rm.insert(a.clone(), have - e);
        }
        let t = build_mul(rc.mul(bc.recip()), rm);
        r = &r - &(&t * b);
        q.push(t);
    }
    None
}

fn build_mul(coef: Num, powers: BTreeMap<Expr, i64>) -> Expr {
    let coef = if powers.is_empty() {
        coef
    } else {
        exact_unit(coef)
    };
    let mut fs: Vec<Expr> = Vec::with_capacity(powers.len() + 1);
    for (b, e) in powers {
        if e == 0 {
            continue;
        }
        fs.push(if e == 1 {
            b
        } else {
            Expr::raw(Node::Pow(b, e))
        });
    }
    if fs.is_empty() {
        return Expr::num(coef);
    }
    if coef.is_one() {
        if fs.len() == 1 {
            return fs.pop().unwrap();
        }
        return Expr::raw(Node::Mul(fs));
    }
    let mut all = Vec::with_capacity(fs.len() + 1);
    all.push(Expr::num(coef));
    all.extend(fs);
    Expr::raw(Node::Mul(all))
}

impl From<i64> for Expr {
    fn from(v: i64) -> Self {
        Expr::int(v as i128)
    }
}

impl From<f64> for Expr {
    fn from(v: f64) -> Self {
        Expr::float(v)
    }
}

impl From<Num> for Expr {
    fn from(n: Num) -> Self {
        Expr::num(n)
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl ops::$tr<Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                let f: fn(&Expr, &Expr) -> Expr = $body;
                f(&self, &rhs)
            }
        }
        impl ops::$tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                let f: fn(&Expr, &Expr) -> Expr = $body;
                f(&self, rhs)
            }
        }
        impl ops::$tr<Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                let f: fn(&Expr, &Expr) -> Expr = $body;
                f(self, &rhs)
            }
        }
        impl ops::$tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                let f: fn(&Expr, &Expr) -> Expr = $body;
                f(self, rhs)
            }
        }
    };
}

binop!(Add, add, |a, b| Expr::add_all([a.clone(), b.clone()]));
binop!(Sub, sub, |a, b| Expr::add_all([a.clone(), -b]));
binop!(Mul, mul, |a, b| Expr::mul_all([a.clone(), b.clone()]));
binop!(Div, div, |a, b| Expr::mul_all([a.clone(), b.recip()]));

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}

impl ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::mul_all([Expr::int(-1), self.clone()])
    }
}

impl std::iter::Sum for Expr {
    fn sum<I: Iterator<Item = Expr>>(iter: I) -> Expr {
        Expr::add_all(iter)
    }
}

impl std::iter::Product for Expr {
    fn product<I: Iterator<Item = Expr>>(iter: I) -> Expr {
        Expr::mul_all(iter)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(i: usize) -> Expr {
        Expr::var(&format!("x{i}"))
    }

    #[test]
    fn like_terms_merge() {
        let e = x(1) + x(2) + x(1) * Expr::int(2) - x(2);
        assert_eq!(e, Expr::int(3) * x(1));
        assert!((x(1) - x(1)).is_zero_literal());
    }

    #[test]
    fn products_expand() {
        let e = (x(1) + x(2)) * (x(1) - x(2));
        assert_eq!(e, x(1).pow(2) - x(2).pow(2));
        let sq = (x(1) + Expr::one()).pow(2);
        assert_eq!(sq, x(1).pow(2) + Expr::int(2) * x(1) + Expr::one());
    }

    #[test]
    fn denominators_cancel_before_expansion() {
        let d = Expr::one() - x(1);
        let e = x(4) * d.clone() * d.recip();
        assert_eq!(e, x(4));
        // (x1 - 1) and (1 - x1) share a base up to sign
        let e2 = (x(1) - Expr::one()) * d.recip();
        assert_eq!(e2, Expr::int(-1));
    }

    #[test]
    fn natural_order() {
        assert_eq!(natural_cmp("x2", "x10"), Ordering::Less);
        assert_eq!(natural_cmp("xi1_2", "xi1_10"), Ordering::Less);
        assert!(x(2) < x(10));
    }

    #[test]
    fn parity_normalization() {
        let e = (-x(1)).sin() + x(1).sin();
        assert!(e.is_zero_literal());
        assert_eq!((-x(1)).cos(), x(1).cos());
        assert_eq!((Expr::int(-3) * x(1)).abs(), Expr::int(3) * x(1).abs());
        assert_eq!(x(1).sqrt().pow(2), x(1));
    }

    #[test]
    fn budget_keeps_factored_form() {
        let prev = set_term_budget(4);
        let s = x(1) + x(2) + x(3);
        let e = s.pow(2);
        assert!(matches!(e.node(), Node::Pow(..)));
        set_term_budget(prev);
    }

    #[test]
    fn affine_decomposition() {
        let e = x(4) - x(1) * x(4);
        let (a0, a1) = e.affine_in("x4").unwrap();
        assert!(a0.is_zero_literal());
        assert_eq!(a1, Expr::one() - x(1));
        assert!((x(1) * x(1)).affine_in("x1").is_none());
    }
}
