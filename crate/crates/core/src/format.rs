//! Line-based textual instance format.
//!
//! ```text
//! # comment
//! csp 3 * 2            # or: csp 3 2 2 2
//! con 0 1 3            # constraint 0-1 with 3 allowed pairs
//! 0 0
//! 0 1
//! 1 1
//! ```
//!
//! Two further directives carry state that conditioning and labelling
//! introduce: `dom <X> <k>` followed by `k` lines with one allowed value each,
//! and `name <X> <label>`.

use std::fmt::Write as _;

use crate::csp::{AllowMatrix, CspInstance, Var};
use crate::error::{Error, Result};

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    /// Next non-blank line with comments stripped, as (1-based line number, tokens).
    fn next_tokens(&mut self) -> Option<(usize, Vec<&'a str>)> {
        for (idx, raw) in self.inner.by_ref() {
            let line = raw.split('#').next().unwrap_or("");
            let toks: Vec<&str> = line.split_whitespace().collect();
            if !toks.is_empty() {
                return Some((idx + 1, toks));
            }
        }
        None
    }
}

fn num(line: usize, tok: &str) -> Result<usize> {
    tok.parse()
        .map_err(|_| Error::parse(line, format!("expected a non-negative integer, got `{tok}`")))
}

fn expect_len(line: usize, toks: &[&str], n: usize, what: &str) -> Result<()> {
    if toks.len() != n {
        return Err(Error::parse(line, format!("`{what}` expects {} fields, got {}", n - 1, toks.len() - 1)));
    }
    Ok(())
}

pub fn parse_instance(text: &str) -> Result<CspInstance> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    let (line, header) = lines
        .next_tokens()
        .ok_or_else(|| Error::parse(0, "empty input, expected `csp` header"))?;
    if header[0] != "csp" || header.len() < 2 {
        return Err(Error::parse(line, "expected `csp <n> ...` header"));
    }
    let n = num(line, header[1])?;
    let sizes = if header.get(2) == Some(&"*") {
        expect_len(line, &header, 4, "csp")?;
        vec![num(line, header[3])?; n]
    } else {
        expect_len(line, &header, n + 2, "csp")?;
        header[2..].iter().map(|t| num(line, t)).collect::<Result<Vec<_>>>()?
    };

    let mut constraints = Vec::new();
    let mut doms: Vec<(usize, Var, Vec<bool>)> = Vec::new();
    let mut names: Vec<Option<String>> = vec![None; n];
    while let Some((line, toks)) = lines.next_tokens() {
        match toks[0] {
            "con" => {
                expect_len(line, &toks, 4, "con")?;
                let (x, y, k) = (num(line, toks[1])?, num(line, toks[2])?, num(line, toks[3])?);
                if x >= n || y >= n {
                    return Err(Error::parse(line, format!("constraint ({x}, {y}) names an unknown variable")));
                }
                let mut mat = AllowMatrix::empty(sizes[x], sizes[y]);
                for _ in 0..k {
                    let (pl, pair) = lines
                        .next_tokens()
                        .ok_or_else(|| Error::parse(line, "unexpected end of input inside `con` block"))?;
                    expect_len(pl, &pair, 2, "pair")?;
                    let (i, j) = (num(pl, pair[0])?, num(pl, pair[1])?);
                    if i >= sizes[x] || j >= sizes[y] {
                        return Err(Error::parse(pl, format!("pair ({i}, {j}) outside the domains")));
                    }
                    mat.set(i, j, true);
                }
                constraints.push((x, y, mat));
            }
            "dom" => {
                expect_len(line, &toks, 3, "dom")?;
                let (x, k) = (num(line, toks[1])?, num(line, toks[2])?);
                if x >= n {
                    return Err(Error::parse(line, format!("unknown variable {x}")));
                }
                let mut mask = vec![false; sizes[x]];
                for _ in 0..k {
                    let (vl, v) = lines
                        .next_tokens()
                        .ok_or_else(|| Error::parse(line, "unexpected end of input inside `dom` block"))?;
                    expect_len(vl, &v, 1, "value")?;
                    let v = num(vl, v[0])?;
                    if v >= sizes[x] {
                        return Err(Error::parse(vl, format!("value {v} outside domain of {x}")));
                    }
                    mask[v] = true;
                }
                doms.push((line, x, mask));
            }
            "name" => {
                expect_len(line, &toks, 3, "name")?;
                let x = num(line, toks[1])?;
                if x >= n {
                    return Err(Error::parse(line, format!("unknown variable {x}")));
                }
                names[x] = Some(toks[2].to_string());
            }
            other => return Err(Error::parse(line, format!("unknown directive `{other}`"))),
        }
    }

    let mut inst = CspInstance::new(sizes, constraints).map_err(|e| match e {
        Error::Parse { .. } => e,
        other => Error::parse(0, other.to_string()),
    })?;
    if names.iter().any(Option::is_some) {
        let names = names
            .into_iter()
            .enumerate()
            .map(|(x, n)| n.unwrap_or_else(|| format!("x{x}")))
            .collect();
        inst = inst.with_names(names)?;
    }
    for (line, x, mask) in doms {
        inst.set_unary(x, mask)
            .map_err(|e| Error::parse(line, e.to_string()))?;
    }
    Ok(inst)
}

/// Serializes an instance; `header` lines are emitted as `#` comments first.
pub fn write_instance(inst: &CspInstance, header: &[String]) -> String {
    let mut out = String::new();
    for h in header {
        let _ = writeln!(out, "# {h}");
    }
    match inst.uniform_domain() {
        Some(m) => {
            let _ = writeln!(out, "csp {} * {}", inst.num_vars(), m);
        }
        None => {
            let _ = write!(out, "csp {}", inst.num_vars());
            for m in inst.domain_sizes() {
                let _ = write!(out, " {m}");
            }
            out.push('\n');
        }
    }
    if let Some(names) = inst.names() {
        for (x, name) in names.iter().enumerate() {
            let _ = writeln!(out, "name {x} {name}");
        }
    }
    for x in 0..inst.num_vars() {
        let u = inst.unary(x);
        if u.iter().any(|&b| !b) {
            let live: Vec<usize> = (0..u.len()).filter(|&i| u[i]).collect();
            let _ = writeln!(out, "dom {x} {}", live.len());
            for v in live {
                let _ = writeln!(out, "{v}");
            }
        }
    }
    for e in inst.edges() {
        let pairs: Vec<_> = e.matrix.allowed_pairs().collect();
        let _ = writeln!(out, "con {} {} {}", e.x, e.y, pairs.len());
        for (i, j) in pairs {
            let _ = writeln!(out, "{i} {j}");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csp::fixtures::chain_le_3;

    const CHAIN: &str = "\
# chain of <= constraints
csp 3 * 2
con 0 1 3
0 0
0 1   # trailing comment
1 1

con 1 2 3
0 0
0 1
1 1
";

    #[test]
    fn parses_chain() {
        assert_eq!(parse_instance(CHAIN).unwrap(), chain_le_3());
    }

    #[test]
    fn explicit_domain_sizes_and_reverse_orientation() {
        let text = "csp 2 2 3\ncon 1 0 1\n2 1\n";
        let inst = parse_instance(text).unwrap();
        assert_eq!(inst.domain_sizes(), &[2, 3]);
        assert!(inst.arc_between(0, 1).unwrap().allows(1, 2));
        assert_eq!(inst.arc_between(0, 1).unwrap().to_matrix().allowed_count(), 1);
    }

    #[test]
    fn strict_parsing() {
        assert!(matches!(parse_instance(""), Err(Error::Parse { .. })));
        assert!(matches!(parse_instance("csp 2 * 2\nfoo 1\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_instance("csp 2 * 2\ncon 0 1 2\n0 0\n"), Err(Error::Parse { .. })));
        assert!(matches!(parse_instance("csp 2 * 2\ncon 0 1 1\n0 2\n"), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(parse_instance("csp 2 2\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_instance("csp 2 * 2\ncon 0 0 0\n"), Err(Error::Parse { .. })));
        assert!(matches!(
            parse_instance("csp 2 * 2\ncon 0 1 0\ncon 1 0 0\n"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn round_trip_with_conditioning_and_names() {
        let inst = chain_le_3()
            .condition(&[(2, 1)])
            .unwrap()
            .with_names(vec!["a".into(), "b".into(), "c".into()])
            .unwrap();
        let text = write_instance(&inst, &["seed=1".to_string()]);
        assert!(text.starts_with("# seed=1\ncsp 3 * 2\n"));
        assert_eq!(parse_instance(&text).unwrap(), inst);
    }
}
