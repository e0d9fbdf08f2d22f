use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

/// Built-in single-argument functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    pub const ALL: [Func; 9] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Sinh,
        Func::Cosh,
        Func::Tanh,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.iter().copied().find(|f| f.name() == name)
    }

    pub fn arity(self) -> usize {
        1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

const PREC_NEG: u8 = 3;
const PREC_ATOM: u8 = 5;

#[derive(Debug)]
pub enum Node {
    Const(f64),
    /// Reference to coordinate `index` (0-based) of the evaluation point.
    Var {
        index: usize,
        name: Arc<str>,
    },
    Neg(Expr),
    Binary(BinOp, Expr, Expr),
    Call(Func, Expr),
}

/// Immutable expression tree. Subtrees are reference counted, so symbolic
/// assembly may share them freely; evaluation memoizes shared nodes.
#[derive(Clone)]
pub struct Expr(Arc<Node>);

impl Expr {
    pub fn node(&self) -> &Node {
        &self.0
    }

    pub(crate) fn ptr(&self) -> *const Node {
        Arc::as_ptr(&self.0)
    }

    pub(crate) fn is_shared(&self) -> bool {
        Arc::strong_count(&self.0) > 1
    }

    pub(crate) fn from_node(node: Node) -> Expr {
        Expr(Arc::new(node))
    }

    pub fn constant(value: f64) -> Expr {
        Expr::from_node(Node::Const(value))
    }

    pub fn var(index: usize, name: impl Into<Arc<str>>) -> Expr {
        Expr::from_node(Node::Var {
            index,
            name: name.into(),
        })
    }

    pub fn as_const(&self) -> Option<f64> {
        match self.node() {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    /// True when no variable occurs in the tree.
    pub fn is_constant(&self) -> bool {
        match self.node() {
            Node::Const(_) => true,
            Node::Var { .. } => false,
            Node::Neg(a) | Node::Call(_, a) => a.is_constant(),
            Node::Binary(_, a, b) => a.is_constant() && b.is_constant(),
        }
    }

    /// Largest variable index referenced, if any.
    pub fn max_var_index(&self) -> Option<usize> {
        match self.node() {
            Node::Const(_) => None,
            Node::Var { index, .. } => Some(*index),
            Node::Neg(a) | Node::Call(_, a) => a.max_var_index(),
            Node::Binary(_, a, b) => match (a.max_var_index(), b.max_var_index()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
        }
    }

    /// Indices of all variables referenced, ascending.
    pub fn variables(&self) -> Vec<usize> {
        fn walk(e: &Expr, out: &mut std::collections::BTreeSet<usize>) {
            match e.node() {
                Node::Const(_) => {}
                Node::Var { index, .. } => {
                    out.insert(*index);
                }
                Node::Neg(a) | Node::Call(_, a) => walk(a, out),
                Node::Binary(_, a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
            }
        }
        let mut out = std::collections::BTreeSet::new();
        walk(self, &mut out);
        out.into_iter().collect()
    }

    /// Number of nodes counting shared subtrees once.
    pub fn dag_size(&self) -> usize {
        fn walk(e: &Expr, seen: &mut std::collections::HashSet<*const Node>) {
            if !seen.insert(e.ptr()) {
                return;
            }
            match e.node() {
                Node::Const(_) | Node::Var { .. } => {}
                Node::Neg(a) | Node::Call(_, a) => walk(a, seen),
                Node::Binary(_, a, b) => {
                    walk(a, seen);
                    walk(b, seen);
                }
            }
        }
        let mut seen = std::collections::HashSet::new();
        walk(self, &mut seen);
        seen.len()
    }

    // ---- symbolic assembly ------------------------------------------------
    //
    // The constructors below drop additive zeros and multiplicative ones and
    // fold constant operands. The parser never uses them, so parsed trees are
    // kept exactly as written.

    pub fn add(a: &Expr, b: &Expr) -> Expr {
        if a.is_zero() {
            return b.clone();
        }
        if b.is_zero() {
            return a.clone();
        }
        if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
            return Expr::constant(x + y);
        }
        Expr::from_node(Node::Binary(BinOp::Add, a.clone(), b.clone()))
    }

    pub fn sub(a: &Expr, b: &Expr) -> Expr {
        if b.is_zero() {
            return a.clone();
        }
        if a.is_zero() {
            return Expr::neg(b);
        }
        if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
            return Expr::constant(x - y);
        }
        Expr::from_node(Node::Binary(BinOp::Sub, a.clone(), b.clone()))
    }

    pub fn mul(a: &Expr, b: &Expr) -> Expr {
        if a.is_zero() || b.is_zero() {
            return Expr::constant(0.0);
        }
        if a.is_one() {
            return b.clone();
        }
        if b.is_one() {
            return a.clone();
        }
        if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
            return Expr::constant(x * y);
        }
        if a.as_const() == Some(-1.0) {
            return Expr::neg(b);
        }
        if b.as_const() == Some(-1.0) {
            return Expr::neg(a);
        }
        Expr::from_node(Node::Binary(BinOp::Mul, a.clone(), b.clone()))
    }

    pub fn div(a: &Expr, b: &Expr) -> Expr {
        if a.is_zero() {
            return Expr::constant(0.0);
        }
        if b.is_one() {
            return a.clone();
        }
        if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
            if y != 0.0 {
                return Expr::constant(x / y);
            }
        }
        Expr::from_node(Node::Binary(BinOp::Div, a.clone(), b.clone()))
    }

    pub fn neg(a: &Expr) -> Expr {
        match a.node() {
            Node::Const(c) => Expr::constant(-c),
            Node::Neg(inner) => inner.clone(),
            _ => Expr::from_node(Node::Neg(a.clone())),
        }
    }

    pub fn pow(a: &Expr, b: &Expr) -> Expr {
        if b.is_zero() {
            return Expr::constant(1.0);
        }
        if b.is_one() {
            return a.clone();
        }
        Expr::from_node(Node::Binary(BinOp::Pow, a.clone(), b.clone()))
    }

    pub fn call(func: Func, a: &Expr) -> Expr {
        Expr::from_node(Node::Call(func, a.clone()))
    }

    /// Sum of terms, skipping zeros.
    pub fn sum<'a>(terms: impl IntoIterator<Item = &'a Expr>) -> Expr {
        terms.into_iter().fold(Expr::constant(0.0), |acc, t| Expr::add(&acc, t))
    }

    /// Symbolic partial derivative with respect to variable `index`.
    ///
    /// Shared subtrees are differentiated once.
    pub fn derivative(&self, index: usize) -> Expr {
        let mut memo = HashMap::new();
        self.derivative_memo(index, &mut memo)
    }

    fn derivative_memo(&self, index: usize, memo: &mut HashMap<*const Node, Expr>) -> Expr {
        if let Some(d) = memo.get(&self.ptr()) {
            return d.clone();
        }
        let d = match self.node() {
            Node::Const(_) => Expr::constant(0.0),
            Node::Var { index: i, .. } => Expr::constant(if *i == index { 1.0 } else { 0.0 }),
            Node::Neg(a) => Expr::neg(&a.derivative_memo(index, memo)),
            Node::Binary(op, a, b) => {
                let da = a.derivative_memo(index, memo);
                let db = b.derivative_memo(index, memo);
                match op {
                    BinOp::Add => Expr::add(&da, &db),
                    BinOp::Sub => Expr::sub(&da, &db),
                    BinOp::Mul => Expr::add(&Expr::mul(&da, b), &Expr::mul(a, &db)),
                    BinOp::Div => {
                        // (a/b)' = a'/b - a b' / b^2
                        let first = Expr::div(&da, b);
                        let second = Expr::div(&Expr::mul(a, &db), &Expr::mul(b, b));
                        Expr::sub(&first, &second)
                    }
                    BinOp::Pow => {
                        if b.is_constant() {
                            // b a^(b-1) a'
                            let bm1 = Expr::sub(b, &Expr::constant(1.0));
                            Expr::mul(&Expr::mul(b, &Expr::pow(a, &bm1)), &da)
                        } else {
                            // a^b (b' log a + b a'/a)
                            let log_a = Expr::call(Func::Log, a);
                            let inner = Expr::add(&Expr::mul(&db, &log_a), &Expr::div(&Expr::mul(b, &da), a));
                            Expr::mul(self, &inner)
                        }
                    }
                }
            }
            Node::Call(func, a) => {
                let da = a.derivative_memo(index, memo);
                if da.is_zero() {
                    Expr::constant(0.0)
                } else {
                    let outer = match func {
                        Func::Sin => Expr::call(Func::Cos, a),
                        Func::Cos => Expr::neg(&Expr::call(Func::Sin, a)),
                        Func::Tan => {
                            let c = Expr::call(Func::Cos, a);
                            Expr::div(&Expr::constant(1.0), &Expr::mul(&c, &c))
                        }
                        Func::Sinh => Expr::call(Func::Cosh, a),
                        Func::Cosh => Expr::call(Func::Sinh, a),
                        Func::Tanh => {
                            let t = Expr::call(Func::Tanh, a);
                            Expr::sub(&Expr::constant(1.0), &Expr::mul(&t, &t))
                        }
                        Func::Exp => self.clone(),
                        Func::Log => Expr::div(&Expr::constant(1.0), a),
                        Func::Sqrt => Expr::div(&Expr::constant(0.5), self),
                    };
                    Expr::mul(&outer, &da)
                }
            }
        };
        memo.insert(self.ptr(), d.clone());
        d
    }

    fn precedence(&self) -> u8 {
        match self.node() {
            Node::Const(c) if c.is_sign_negative() => PREC_NEG,
            Node::Const(_) | Node::Var { .. } | Node::Call(..) => PREC_ATOM,
            Node::Neg(_) => PREC_NEG,
            Node::Binary(op, ..) => op.precedence(),
        }
    }

    /// Structural equality (not mathematical equivalence).
    pub fn same_structure(&self, other: &Expr) -> bool {
        if self.ptr() == other.ptr() {
            return true;
        }
        match (self.node(), other.node()) {
            (Node::Const(a), Node::Const(b)) => a.to_bits() == b.to_bits(),
            (Node::Var { index: a, .. }, Node::Var { index: b, .. }) => a == b,
            (Node::Neg(a), Node::Neg(b)) => a.same_structure(b),
            (Node::Call(f, a), Node::Call(g, b)) => f == g && a.same_structure(b),
            (Node::Binary(o1, a1, b1), Node::Binary(o2, a2, b2)) => {
                o1 == o2 && a1.same_structure(a2) && b1.same_structure(b2)
            }
            _ => false,
        }
    }
}

pub(crate) fn format_number(value: f64) -> String {
    if value.fract() == 0.0 && value.abs() < 1e15 {
        format!("{}", value as i64)
    } else {
        format!("{:?}", value)
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, child: &Expr, min_prec: u8) -> fmt::Result {
    if child.precedence() < min_prec {
        write!(f, "({})", child)
    } else {
        write!(f, "{}", child)
    }
}

/// Prints in the parser's grammar with the minimum parentheses needed to
/// re-parse to an equivalent tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Const(c) => {
                if *c == 0.0 && c.is_sign_negative() {
                    write!(f, "0")
                } else {
                    write!(f, "{}", format_number(*c))
                }
            }
            Node::Var { name, .. } => write!(f, "{}", name),
            Node::Neg(a) => {
                write!(f, "-")?;
                write_child(f, a, PREC_NEG)
            }
            Node::Call(func, a) => write!(f, "{}({})", func.name(), a),
            Node::Binary(op, a, b) => {
                let p = op.precedence();
                // left associative; a right operand of equal precedence keeps
                // its parentheses so the reparsed tree (and its rounding) is
                // unchanged
                let (left_min, right_min) = match op {
                    BinOp::Add | BinOp::Mul | BinOp::Sub | BinOp::Div => (p, p + 1),
                    // right associative; the exponent may carry a unary minus
                    BinOp::Pow => (PREC_ATOM, PREC_NEG),
                };
                write_child(f, a, left_min)?;
                write!(f, "{}", op.symbol())?;
                write_child(f, b, right_min)
            }
        }
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Const(c) => write!(f, "{}", format_number(*c)),
            Node::Var { name, .. } => write!(f, "var {}", name),
            Node::Neg(a) => write!(f, "neg({:?})", a),
            Node::Call(func, a) => write!(f, "{}({:?})", func.name(), a),
            Node::Binary(op, a, b) => {
                let name = match op {
                    BinOp::Add => "add",
                    BinOp::Sub => "sub",
                    BinOp::Mul => "mul",
                    BinOp::Div => "div",
                    BinOp::Pow => "pow",
                };
                write!(f, "{}({:?}, {:?})", name, a, b)
            }
        }
    }
}
