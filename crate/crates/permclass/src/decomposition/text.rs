//! Parenthesized text form of decomposition and packed trees.
//!
//! ```text
//! packed := "." | "(" "*" packed packed+ ")" | "(" "g" PERM "[" SLOT ("," SLOT)* "]" packed+ ")"
//! canon  := "." | "(" ("+" | "-") canon canon+ ")" | "(" "s" PERM canon+ ")"
//! forest := packed (" " packed)*
//! PERM   := DIGITS (size <= 9) | "{" INT ("," INT)* "}"
//! SLOT   := "L" | "P" INT
//! ```
//! A leaf is `.`; the arity of `⊛`, `⊕`, `⊖` is the number of children.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::perm::Permutation;
use crate::tree::PlaneTree;

use super::packed::{DecoratedForest, Gadget, PackedNode, PackedTree, Slot};
use super::{check_arities, CanonicalTree, DecompositionTree, HasSize, Node};

fn perm_token(p: &Permutation) -> String {
    p.to_compact().unwrap_or_else(|| {
        let parts: Vec<String> = p.values().iter().map(u32::to_string).collect();
        format!("{{{}}}", parts.join(","))
    })
}

fn write_tree<D>(tree: &PlaneTree<D>, f: &mut impl fmt::Write, head: impl Fn(&D) -> String) -> fmt::Result {
    enum Ev {
        Enter(usize),
        Exit,
    }
    let mut stack = vec![Ev::Enter(0)];
    let mut first = true;
    while let Some(ev) = stack.pop() {
        match ev {
            Ev::Exit => f.write_char(')')?,
            Ev::Enter(v) => {
                if !first {
                    f.write_char(' ')?;
                }
                first = false;
                match tree.dec(v) {
                    None => f.write_char('.')?,
                    Some(d) => {
                        write!(f, "({}", head(d))?;
                        stack.push(Ev::Exit);
                        let kids: Vec<usize> = tree.children(v).collect();
                        stack.extend(kids.into_iter().rev().map(Ev::Enter));
                    }
                }
            }
        }
    }
    Ok(())
}

fn canon_head(d: &Node) -> String {
    match d {
        Node::Plus(_) => "+".into(),
        Node::Minus(_) => "-".into(),
        Node::Simple(a) => format!("s {}", perm_token(a)),
    }
}

fn packed_head(d: &PackedNode) -> String {
    match d {
        PackedNode::Star(_) => "*".into(),
        PackedNode::Gadget(g) => {
            let slots: Vec<String> = g
                .slots()
                .iter()
                .map(|s| match s {
                    Slot::Leaf => "L".to_string(),
                    Slot::Plus(m) => format!("P{m}"),
                })
                .collect();
            format!("g {} [{}]", perm_token(g.root()), slots.join(","))
        }
    }
}

impl fmt::Display for PlaneTree<Node> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_tree(self, f, canon_head)
    }
}

impl fmt::Display for PlaneTree<PackedNode> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_tree(self, f, packed_head)
    }
}

impl fmt::Display for CanonicalTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&**self, f)
    }
}

impl fmt::Display for PackedTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&**self, f)
    }
}

impl fmt::Display for DecoratedForest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.trees().iter().enumerate() {
            if i > 0 {
                f.write_char(' ')?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open,
    Close,
    Dot,
    Word(String),
    Perm(Permutation),
    Slots(Vec<Slot>),
}

fn tokenize(s: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let grab = |i: &mut usize, close: char| -> Result<String> {
        let start = *i + 1;
        let end = chars[start..]
            .iter()
            .position(|&c| c == close)
            .ok_or_else(|| Error::InvalidInput(format!("missing {close:?}")))?;
        *i = start + end + 1;
        Ok(chars[start..start + end].iter().collect())
    };
    while i < chars.len() {
        match chars[i] {
            c if c.is_whitespace() => i += 1,
            '(' => {
                out.push(Tok::Open);
                i += 1
            }
            ')' => {
                out.push(Tok::Close);
                i += 1
            }
            '.' => {
                out.push(Tok::Dot);
                i += 1
            }
            '*' | '+' | '-' => {
                out.push(Tok::Word(chars[i].to_string()));
                i += 1
            }
            '{' => {
                let body = grab(&mut i, '}')?;
                out.push(Tok::Perm(body.replace(',', " ").parse()?));
            }
            '[' => {
                let body = grab(&mut i, ']')?;
                let slots = body
                    .split(',')
                    .map(|t| match t.trim() {
                        "L" => Ok(Slot::Leaf),
                        t if t.starts_with('P') => {
                            t[1..].parse().map(Slot::Plus).map_err(|_| Error::InvalidInput(format!("bad slot {t:?}")))
                        }
                        t => invalid(format!("bad slot {t:?}")),
                    })
                    .collect::<Result<_>>()?;
                out.push(Tok::Slots(slots));
            }
            c if c.is_ascii_alphanumeric() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                    i += 1;
                }
                out.push(Tok::Word(chars[start..i].iter().collect()));
            }
            c => return invalid(format!("unexpected character {c:?}")),
        }
    }
    Ok(out)
}

/// Heads know their decoration only once their children are counted.
enum Head<D> {
    Counted(fn(usize) -> D),
    Fixed(D),
}

fn parse_trees<D: HasSize>(
    s: &str,
    read_head: impl Fn(&mut std::iter::Peekable<std::vec::IntoIter<Tok>>) -> Result<Head<D>>,
) -> Result<Vec<PlaneTree<D>>> {
    let mut toks = tokenize(s)?.into_iter().peekable();
    let mut trees = Vec::new();
    while toks.peek().is_some() {
        let mut tree: Option<PlaneTree<D>> = None;
        let mut open: Vec<(usize, Head<D>)> = Vec::new();
        loop {
            let tok = toks.next().ok_or_else(|| Error::InvalidInput("unexpected end of tree".into()))?;
            let new_vertex = |tree: &mut Option<PlaneTree<D>>, open: &Vec<(usize, Head<D>)>| -> Result<usize> {
                match (tree.as_mut(), open.last()) {
                    (None, _) => {
                        *tree = Some(PlaneTree::leaf());
                        Ok(0)
                    }
                    (Some(t), Some(&(p, _))) => Ok(t.add_child(p, None)),
                    (Some(_), None) => invalid("trailing content after a complete tree"),
                }
            };
            match tok {
                Tok::Dot => {
                    new_vertex(&mut tree, &open)?;
                }
                Tok::Open => {
                    let id = new_vertex(&mut tree, &open)?;
                    let head = read_head(&mut toks)?;
                    open.push((id, head));
                }
                Tok::Close => {
                    let (id, head) = open.pop().ok_or_else(|| Error::InvalidInput("unbalanced ')'".into()))?;
                    let t = tree.as_mut().expect("vertex exists");
                    let dec = match head {
                        Head::Counted(make) => make(t.degree(id)),
                        Head::Fixed(d) => d,
                    };
                    t.set_dec(id, Some(dec));
                }
                other => return invalid(format!("unexpected token {other:?}")),
            }
            if open.is_empty() {
                break;
            }
        }
        let tree = tree.expect("at least one vertex");
        check_arities(&tree)?;
        trees.push(tree);
    }
    if trees.is_empty() {
        return invalid("empty tree text");
    }
    Ok(trees)
}

fn expect_perm(toks: &mut std::iter::Peekable<std::vec::IntoIter<Tok>>) -> Result<Permutation> {
    match toks.next() {
        Some(Tok::Perm(p)) => Ok(p),
        Some(Tok::Word(w)) => w.parse(),
        other => invalid(format!("expected a permutation, got {other:?}")),
    }
}

fn read_canon_head(toks: &mut std::iter::Peekable<std::vec::IntoIter<Tok>>) -> Result<Head<Node>> {
    match toks.next() {
        Some(Tok::Word(w)) if w == "+" => Ok(Head::Counted(Node::Plus)),
        Some(Tok::Word(w)) if w == "-" => Ok(Head::Counted(Node::Minus)),
        Some(Tok::Word(w)) if w == "s" => {
            let a = expect_perm(toks)?;
            if !a.is_simple() {
                return invalid(format!("{a} is not simple"));
            }
            Ok(Head::Fixed(Node::Simple(a)))
        }
        other => invalid(format!("expected +, - or s, got {other:?}")),
    }
}

fn read_packed_head(toks: &mut std::iter::Peekable<std::vec::IntoIter<Tok>>) -> Result<Head<PackedNode>> {
    match toks.next() {
        Some(Tok::Word(w)) if w == "*" => Ok(Head::Counted(PackedNode::Star)),
        Some(Tok::Word(w)) if w == "g" => {
            let a = expect_perm(toks)?;
            let slots = match toks.next() {
                Some(Tok::Slots(s)) => s,
                other => return invalid(format!("expected a slot list, got {other:?}")),
            };
            Ok(Head::Fixed(PackedNode::Gadget(Gadget::new(a, slots)?)))
        }
        other => invalid(format!("expected * or g, got {other:?}")),
    }
}

/// Parses any `Ŝ`-decorated tree (canonical or not).
pub fn parse_decomposition_tree(s: &str) -> Result<DecompositionTree> {
    let mut trees = parse_trees(s, read_canon_head)?;
    if trees.len() != 1 {
        return invalid("expected exactly one tree");
    }
    Ok(trees.pop().expect("one tree"))
}

impl FromStr for CanonicalTree {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        CanonicalTree::new(parse_decomposition_tree(s)?)
    }
}

impl FromStr for PackedTree {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let mut trees = parse_trees(s, read_packed_head)?;
        if trees.len() != 1 {
            return invalid("expected exactly one tree");
        }
        PackedTree::new(trees.pop().expect("one tree"))
    }
}

impl FromStr for DecoratedForest {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let trees = parse_trees(s, read_packed_head)?.into_iter().map(PackedTree::new).collect::<Result<Vec<_>>>()?;
        DecoratedForest::new(trees)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::{canonical_tree, pack};

    #[test]
    fn canonical_text_round_trip() {
        for nu in Permutation::all(6) {
            let t = canonical_tree(&nu);
            let text = t.to_string();
            assert_eq!(text.parse::<CanonicalTree>().unwrap(), t, "{text}");
        }
        assert_eq!(".".parse::<CanonicalTree>().unwrap().len(), 1);
    }

    #[test]
    fn packed_text_golden() {
        let text = "(* . . (g 2413 [P2,L,L,P2] (* . (* . .) .) . (* . (* . .)) . . .))";
        let t: PackedTree = text.parse().unwrap();
        assert_eq!(t.to_string(), text);
        assert_eq!(t.size(), 13);
    }

    #[test]
    fn long_simple_roots_use_braces() {
        let a: Permutation = "2 4 6 8 10 1 3 5 7 9".parse().unwrap();
        assert!(a.is_simple());
        let t = pack(&canonical_tree(&a)).unwrap();
        let text = t.to_string();
        assert!(text.starts_with("(g {2,4,6,8,10,1,3,5,7,9} [L,L,L,L,L,L,L,L,L,L]"));
        assert_eq!(text.parse::<PackedTree>().unwrap(), t);
    }

    #[test]
    fn forest_text() {
        let f: DecoratedForest = ". (* . .) .".parse().unwrap();
        assert_eq!(f.trees().len(), 3);
        assert_eq!(f.to_string(), ". (* . .) .");
    }

    #[test]
    fn malformed_inputs() {
        for bad in [
            "",
            "(",
            "(* .)",
            "(* . .",
            "(g 2413 [L,L,L] . . .)",
            "(g 1234 [L,L,L,L] . . . .)",
            "(+ . (+ . .))",
            "(q . .)",
            ". )",
        ] {
            assert!(bad.parse::<CanonicalTree>().is_err() || bad.parse::<PackedTree>().is_err(), "{bad}");
        }
        assert!("(* .)".parse::<PackedTree>().is_err());
        assert!("(+ . (+ . .))".parse::<CanonicalTree>().is_err());
        assert!("(+ . (+ . .))".parse::<CanonicalTree>().is_err());
        assert!(parse_decomposition_tree("(+ . (+ . .))").is_ok());
    }
}
