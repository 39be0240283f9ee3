//! SteinLib-style text formats.
//!
//! Instance files:
//!
//! ```text
//! SECTION Graph
//! Nodes 3
//! Edges 2          (or `Arcs 2` with `A` lines for directed graphs)
//! E 1 2 5
//! E 2 3 2.5
//! END
//!
//! SECTION Terminals
//! Terminals 2
//! Root 1           (directed instances only)
//! T 1
//! T 3
//! END
//!
//! SECTION Pairs    (forest instances, instead of Terminals)
//! Pairs 1
//! P 1 3
//! END
//!
//! EOF
//! ```
//!
//! Vertex ids are 1-based in files and 0-based in memory. Weights are exact
//! decimals or fractions `p/q`. Unknown sections are skipped.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graph::{EdgeId, Graph, TerminalSpec, VertexId};
use crate::weight::{format_rational, parse_rational, Rational, Weight};

fn perr<T>(line: usize, msg: impl Into<String>) -> Result<T> {
    Err(Error::Parse { line, msg: msg.into() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Comment,
    Graph,
    Terminals,
    Pairs,
    Solution,
    Other,
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines { inner: text.lines().enumerate() }
    }
}

impl<'a> Iterator for Lines<'a> {
    /// (1-based line number, whitespace tokens)
    type Item = (usize, Vec<&'a str>);

    fn next(&mut self) -> Option<Self::Item> {
        for (i, l) in self.inner.by_ref() {
            let toks: Vec<&str> = l.split_whitespace().collect();
            if !toks.is_empty() {
                return Some((i + 1, toks));
            }
        }
        None
    }
}

fn section_of(name: &str) -> Section {
    match name.to_ascii_lowercase().as_str() {
        "comment" => Section::Comment,
        "graph" => Section::Graph,
        "terminals" => Section::Terminals,
        "pairs" => Section::Pairs,
        "solution" => Section::Solution,
        _ => Section::Other,
    }
}

fn count(line: usize, toks: &[&str]) -> Result<usize> {
    match toks {
        [_, n] => n.parse().or_else(|_| perr(line, format!("bad count {n:?}"))),
        _ => perr(line, format!("expected `{} <count>`", toks[0])),
    }
}

fn vertex(line: usize, tok: &str) -> Result<usize> {
    match tok.parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v),
        _ => perr(line, format!("bad vertex id {tok:?}")),
    }
}

fn weight(line: usize, tok: &str) -> Result<Weight> {
    parse_rational(tok).or_else(|_| perr(line, format!("bad weight {tok:?}")))
}

#[derive(Default)]
struct Declared {
    count: Option<(usize, usize)>,
    seen: usize,
}

impl Declared {
    fn set(&mut self, line: usize, n: usize) -> Result<()> {
        if self.count.is_some() {
            return perr(line, "count declared twice");
        }
        self.count = Some((line, n));
        Ok(())
    }

    fn check(&self, what: &str) -> Result<()> {
        match self.count {
            Some((line, n)) if n != self.seen => {
                perr(line, format!("declared {n} {what} but found {}", self.seen))
            }
            _ => Ok(()),
        }
    }
}

/// Parses an instance; see the module docs for the grammar.
pub fn parse_instance(text: &str) -> Result<(Graph, TerminalSpec)> {
    let mut section: Option<Section> = None;
    let mut nodes: Option<(usize, usize)> = None;
    let mut directed: Option<bool> = None;
    let mut edges: Vec<(usize, usize, usize, Weight)> = Vec::new();
    let (mut edge_decl, mut term_decl, mut pair_decl) = (Declared::default(), Declared::default(), Declared::default());
    let mut terminals: Vec<(usize, usize)> = Vec::new();
    let mut pairs: Vec<(usize, usize, usize)> = Vec::new();
    let mut root: Option<(usize, usize)> = None;
    let (mut saw_terminals, mut saw_pairs, mut saw_eof) = (false, false, false);
    let mut last_line = 0;

    for (line, toks) in Lines::new(text) {
        last_line = line;
        let key = toks[0].to_ascii_lowercase();
        match (section, key.as_str()) {
            (_, "eof") => {
                if section.is_some() {
                    return perr(line, "EOF inside a section");
                }
                saw_eof = true;
                break;
            }
            (None, "section") => {
                let Some(name) = toks.get(1) else { return perr(line, "SECTION needs a name") };
                let s = section_of(name);
                match s {
                    Section::Terminals => saw_terminals = true,
                    Section::Pairs => saw_pairs = true,
                    Section::Solution => return perr(line, "this is a solution file, not an instance"),
                    _ => {}
                }
                section = Some(s);
            }
            (None, _) => {
                // SteinLib header line and stray text before the first section
                if line == 1 {
                    continue;
                }
                return perr(line, format!("expected SECTION, found {:?}", toks[0]));
            }
            (Some(s), "end") => {
                match s {
                    Section::Graph => edge_decl.check(if directed == Some(true) { "arcs" } else { "edges" })?,
                    Section::Terminals => term_decl.check("terminals")?,
                    Section::Pairs => pair_decl.check("pairs")?,
                    _ => {}
                }
                section = None;
            }
            (Some(Section::Comment | Section::Other), _) => {}
            (Some(Section::Graph), "nodes") => {
                if nodes.is_some() {
                    return perr(line, "Nodes declared twice");
                }
                nodes = Some((line, count(line, &toks)?));
            }
            (Some(Section::Graph), "edges" | "arcs") => {
                let d = key == "arcs";
                if directed.is_some_and(|x| x != d) {
                    return perr(line, "cannot mix edges and arcs");
                }
                directed = Some(d);
                edge_decl.set(line, count(line, &toks)?)?;
            }
            (Some(Section::Graph), "e" | "a") => {
                let d = key == "a";
                if directed.is_some_and(|x| x != d) {
                    return perr(line, "cannot mix edges and arcs");
                }
                directed = Some(d);
                let [_, u, v, w] = toks[..] else { return perr(line, format!("expected `{} u v weight`", toks[0])) };
                edges.push((line, vertex(line, u)?, vertex(line, v)?, weight(line, w)?));
                edge_decl.seen += 1;
            }
            (Some(Section::Terminals), "terminals") => term_decl.set(line, count(line, &toks)?)?,
            (Some(Section::Terminals), "root") => {
                let [_, r] = toks[..] else { return perr(line, "expected `Root v`") };
                if root.is_some() {
                    return perr(line, "Root declared twice");
                }
                root = Some((line, vertex(line, r)?));
            }
            (Some(Section::Terminals), "t") => {
                let [_, v] = toks[..] else { return perr(line, "expected `T v`") };
                terminals.push((line, vertex(line, v)?));
                term_decl.seen += 1;
            }
            (Some(Section::Pairs), "pairs") => pair_decl.set(line, count(line, &toks)?)?,
            (Some(Section::Pairs), "p") => {
                let [_, s, t] = toks[..] else { return perr(line, "expected `P s t`") };
                pairs.push((line, vertex(line, s)?, vertex(line, t)?));
                pair_decl.seen += 1;
            }
            (Some(_), _) => return perr(line, format!("unexpected {:?} in this section", toks[0])),
        }
    }
    if section.is_some() {
        return perr(last_line, "missing END");
    }
    if !saw_eof {
        return perr(last_line, "missing EOF");
    }
    let Some((_, n)) = nodes else { return perr(last_line, "no Nodes declaration") };
    if saw_terminals && saw_pairs {
        return perr(last_line, "an instance has either a Terminals or a Pairs section, not both");
    }
    let dangling = |line: usize, v: usize| -> Result<VertexId> {
        if v > n {
            perr(line, format!("vertex {v} is not among the {n} nodes"))
        } else {
            Ok(v - 1)
        }
    };
    let mut g = Graph::new(directed.unwrap_or(false), n);
    for (line, u, v, w) in edges {
        let (u, v) = (dangling(line, u)?, dangling(line, v)?);
        g.add_edge(u, v, w).or_else(|e| perr(line, e.to_string()))?;
    }
    let spec = if saw_pairs {
        let mut ps = Vec::new();
        for (line, s, t) in pairs {
            ps.push((dangling(line, s)?, dangling(line, t)?));
        }
        TerminalSpec::forest(ps)
    } else {
        let mut ts = BTreeSet::new();
        for (line, v) in terminals {
            ts.insert(dangling(line, v)?);
        }
        let r = match root {
            Some((line, r)) => {
                let r = dangling(line, r)?;
                if !ts.contains(&r) {
                    return perr(line, "the root must be listed as a terminal");
                }
                Some(r)
            }
            None => None,
        };
        TerminalSpec::tree(ts, r)?
    };
    spec.validate(&g)?;
    Ok((g, spec))
}

/// Writes an instance; `Nodes` is the id bound so ids survive unchanged.
pub fn write_instance(g: &Graph, spec: &TerminalSpec, name: &str) -> String {
    let mut out = String::from("33D32945 STP File, STP Format Version 1.0\n\nSECTION Comment\n");
    let _ = writeln!(out, "Name \"{}\"", name.replace('"', "'"));
    out.push_str("END\n\nSECTION Graph\n");
    let _ = writeln!(out, "Nodes {}", g.id_bound());
    let (word, letter) = if g.is_directed() { ("Arcs", 'A') } else { ("Edges", 'E') };
    let _ = writeln!(out, "{word} {}", g.edge_count());
    for e in g.edges() {
        let _ = writeln!(out, "{letter} {} {} {}", e.u + 1, e.v + 1, format_rational(&e.weight));
    }
    out.push_str("END\n\n");
    match spec {
        TerminalSpec::Tree { terminals, root } => {
            out.push_str("SECTION Terminals\n");
            let _ = writeln!(out, "Terminals {}", terminals.len());
            if let Some(r) = root {
                let _ = writeln!(out, "Root {}", r + 1);
            }
            for t in terminals {
                let _ = writeln!(out, "T {}", t + 1);
            }
        }
        TerminalSpec::Forest { pairs } => {
            out.push_str("SECTION Pairs\n");
            let _ = writeln!(out, "Pairs {}", pairs.len());
            for (s, t) in pairs {
                let _ = writeln!(out, "P {} {}", s + 1, t + 1);
            }
        }
    }
    out.push_str("END\n\nEOF\n");
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolutionHeader {
    /// Cost in input units.
    pub value: Weight,
    pub claimed_ratio: Option<Rational>,
    pub guarantee_void: bool,
}

pub fn write_solution(g: &Graph, edges: &[EdgeId], header: &SolutionHeader) -> String {
    let mut out = String::from("SECTION Solution\n");
    let _ = writeln!(out, "Value {}", format_rational(&header.value));
    match &header.claimed_ratio {
        Some(r) => {
            let _ = writeln!(out, "Ratio {}", format_rational(r));
        }
        None => out.push_str("Ratio none\n"),
    }
    let _ = writeln!(out, "GuaranteeVoid {}", header.guarantee_void);
    let (word, letter) = if g.is_directed() { ("Arcs", 'A') } else { ("Edges", 'E') };
    let _ = writeln!(out, "{word} {}", edges.len());
    let mut sorted = edges.to_vec();
    sorted.sort_unstable();
    for e in sorted {
        let ed = g.edge(e);
        let _ = writeln!(out, "{letter} {} {} {}", ed.u + 1, ed.v + 1, format_rational(&ed.weight));
    }
    out.push_str("END\n\nEOF\n");
    out
}

/// Parses a solution for `g`, matching each line to an unused edge with the
/// same endpoints and weight, and checks the declared value.
pub fn parse_solution(text: &str, g: &Graph) -> Result<(Vec<EdgeId>, SolutionHeader)> {
    let mut in_section = false;
    let mut value: Option<(usize, Weight)> = None;
    let mut claimed_ratio = None;
    let mut guarantee_void = false;
    let mut decl = Declared::default();
    let mut used = BTreeSet::new();
    let mut saw_eof = false;
    let mut last_line = 0;
    for (line, toks) in Lines::new(text) {
        last_line = line;
        let key = toks[0].to_ascii_lowercase();
        match (in_section, key.as_str()) {
            (false, "section") if toks.get(1).map(|s| section_of(s)) == Some(Section::Solution) => in_section = true,
            (false, "eof") => {
                saw_eof = true;
                break;
            }
            (false, _) => return perr(line, format!("expected SECTION Solution, found {:?}", toks[0])),
            (true, "end") => {
                decl.check("edges")?;
                in_section = false;
            }
            (true, "value") => {
                let [_, w] = toks[..] else { return perr(line, "expected `Value w`") };
                value = Some((line, weight(line, w)?));
            }
            (true, "ratio") => {
                let [_, r] = toks[..] else { return perr(line, "expected `Ratio r`") };
                claimed_ratio = if r == "none" { None } else { Some(weight(line, r)?) };
            }
            (true, "guaranteevoid") => {
                guarantee_void = match toks.get(1).copied() {
                    Some("true") => true,
                    Some("false") => false,
                    _ => return perr(line, "expected `GuaranteeVoid true|false`"),
                }
            }
            (true, "edges" | "arcs") => decl.set(line, count(line, &toks)?)?,
            (true, "e" | "a") => {
                let [_, u, v, w] = toks[..] else { return perr(line, "expected `E u v weight`") };
                let (u, v, w) = (vertex(line, u)? - 1, vertex(line, v)? - 1, weight(line, w)?);
                let hit = g.edges().iter().enumerate().find(|(i, e)| {
                    !used.contains(i)
                        && e.weight == w
                        && ((e.u == u && e.v == v) || (!g.is_directed() && e.u == v && e.v == u))
                });
                let Some((id, _)) = hit else {
                    return perr(line, format!("no edge {} {} of weight {} in the instance", u + 1, v + 1, format_rational(&w)));
                };
                used.insert(id);
                decl.seen += 1;
            }
            (true, _) => return perr(line, format!("unexpected {:?} in the solution section", toks[0])),
        }
    }
    if in_section {
        return perr(last_line, "missing END");
    }
    if !saw_eof {
        return perr(last_line, "missing EOF");
    }
    let Some((vline, value)) = value else { return perr(last_line, "missing Value") };
    let edges: Vec<EdgeId> = used.into_iter().collect();
    let cost = g.weight_of(&edges);
    if cost != value {
        return perr(vline, format!("declared value {} but the edges cost {}", format_rational(&value), format_rational(&cost)));
    }
    Ok((edges, SolutionHeader { value, claimed_ratio, guarantee_void }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{gen_random, GenParams, Planted};
    use crate::weight::{int, ratio};

    const MINIMAL: &str = "SECTION Graph\nNodes 2\nEdges 1\nE 1 2 3\nEND\n\nSECTION Terminals\nTerminals 2\nT 1\nT 2\nEND\n\nEOF\n";

    #[test]
    fn minimal_tree_instance() {
        let (g, spec) = parse_instance(MINIMAL).unwrap();
        assert_eq!((g.vertex_count(), g.edge_count()), (2, 1));
        assert_eq!(spec, TerminalSpec::tree([0, 1], None).unwrap());
    }

    #[test]
    fn dangling_terminal() {
        let text = MINIMAL.replace("T 2", "T 5");
        assert!(matches!(parse_instance(&text), Err(Error::Parse { line: 10, .. })));
    }

    #[test]
    fn count_mismatch_and_syntax() {
        let text = MINIMAL.replace("Edges 1", "Edges 2");
        assert!(matches!(parse_instance(&text), Err(Error::Parse { line: 3, .. })));
        let text = MINIMAL.replace("E 1 2 3", "E 1 2 x");
        assert!(matches!(parse_instance(&text), Err(Error::Parse { line: 4, .. })));
        let text = MINIMAL.replace("EOF\n", "");
        assert!(matches!(parse_instance(&text), Err(Error::Parse { .. })));
    }

    #[test]
    fn directed_and_pairs() {
        let text = "SECTION Graph\nNodes 3\nArcs 2\nA 1 2 1\nA 2 3 1\nEND\nSECTION Terminals\nTerminals 2\nRoot 1\nT 1\nT 3\nEND\nEOF\n";
        let (g, spec) = parse_instance(text).unwrap();
        assert!(g.is_directed());
        assert_eq!(spec.root(), Some(0));
        let text = "SECTION Graph\nNodes 3\nEdges 1\nE 1 2 1/3\nEND\nSECTION Pairs\nPairs 1\nP 3 1\nEND\nEOF\n";
        let (g, spec) = parse_instance(text).unwrap();
        assert_eq!(g.edge(0).weight, ratio(1, 3));
        assert_eq!(spec, TerminalSpec::forest([(0, 2)]));
    }

    #[test]
    fn round_trip_random() {
        for seed in 0..100u64 {
            let mut p = GenParams::new(6 + (seed as usize % 5), 4, seed);
            p.directed = seed % 3 == 0;
            p.forest = seed % 3 == 1;
            if seed % 2 == 0 {
                p.planted = Some(Planted { p: 1, c: 2 });
            }
            let x = gen_random(&p).unwrap();
            let text = write_instance(&x.graph, &x.spec, "rt");
            let (g, spec) = parse_instance(&text).unwrap();
            assert_eq!((g, spec), (x.graph.clone(), x.spec.clone()));
            assert_eq!(write_instance(&x.graph, &x.spec, "rt"), text);
        }
    }

    #[test]
    fn solution_round_trip() {
        let g = Graph::from_edges(false, 3, [(0, 1, ratio(5, 2)), (1, 2, int(1)), (0, 1, ratio(5, 2))]).unwrap();
        let header = SolutionHeader { value: ratio(7, 2), claimed_ratio: Some(ratio(3, 2)), guarantee_void: false };
        let text = write_solution(&g, &[1, 2], &header);
        let (edges, h) = parse_solution(&text, &g).unwrap();
        assert_eq!(h, header);
        assert_eq!(g.weight_of(&edges), ratio(7, 2));
        let wrong = text.replace("Value 3.5", "Value 4");
        assert!(matches!(parse_solution(&wrong, &g), Err(Error::Parse { line: 2, .. })));
    }
}
