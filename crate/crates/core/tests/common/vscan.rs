//! Structural checks on emitted Verilog: balanced module/endmodule,
//! begin/end and brackets, every identifier declared before use, and every
//! instantiated module defined somewhere in the scanned sources.

use std::collections::{BTreeSet, HashMap};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Number,
    Sys,
    Str,
    Punct(char),
}

const KEYWORDS: &[&str] = &[
    "module",
    "endmodule",
    "input",
    "output",
    "inout",
    "wire",
    "reg",
    "integer",
    "parameter",
    "localparam",
    "assign",
    "always",
    "initial",
    "begin",
    "end",
    "if",
    "else",
    "for",
    "posedge",
    "negedge",
    "or",
    "signed",
    "repeat",
    "case",
    "endcase",
    "default",
    "genvar",
    "generate",
    "endgenerate",
    "forever",
    "while",
];

const DECL: &[&str] = &[
    "input",
    "output",
    "inout",
    "wire",
    "reg",
    "integer",
    "parameter",
    "localparam",
    "genvar",
];

fn is_kw(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

fn lex(src: &str) -> Result<Vec<Tok>, String> {
    let b = src.as_bytes();
    let mut i = 0;
    let mut out = Vec::new();
    while i < b.len() {
        let c = b[i] as char;
        match c {
            _ if c.is_ascii_whitespace() => i += 1,
            '/' if b.get(i + 1) == Some(&b'/') => {
                while i < b.len() && b[i] != b'\n' {
                    i += 1;
                }
            }
            '/' if b.get(i + 1) == Some(&b'*') => {
                let end = src[i + 2..].find("*/").ok_or("unterminated block comment")?;
                i += end + 4;
            }
            '(' if b.get(i + 1) == Some(&b'*') && b.get(i + 2) != Some(&b')') => {
                let end = src[i + 2..].find("*)").ok_or("unterminated attribute")?;
                i += end + 4;
            }
            '`' => {
                while i < b.len() && b[i] != b'\n' {
                    i += 1;
                }
            }
            '"' => {
                i += 1;
                while i < b.len() && b[i] != b'"' {
                    if b[i] == b'\\' {
                        i += 1;
                    }
                    i += 1;
                }
                if i >= b.len() {
                    return Err("unterminated string".into());
                }
                i += 1;
                out.push(Tok::Str);
            }
            '$' => {
                i += 1;
                while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                    i += 1;
                }
                out.push(Tok::Sys);
            }
            '0'..='9' | '\'' => {
                // Sized or unsized literal such as 12, 4'd3, 32'hace1ace1, 'b1.
                while i < b.len() && b[i].is_ascii_digit() {
                    i += 1;
                }
                if i < b.len() && b[i] == b'\'' {
                    i += 1;
                    if i < b.len() && matches!(b[i], b's' | b'S') {
                        i += 1;
                    }
                    if i < b.len() && matches!(b[i].to_ascii_lowercase(), b'd' | b'h' | b'b' | b'o') {
                        i += 1;
                    } else {
                        return Err(format!("bad literal base near byte {i}"));
                    }
                    while i < b.len() && (b[i].is_ascii_hexdigit() || matches!(b[i], b'_' | b'x' | b'z' | b'X' | b'Z'))
                    {
                        i += 1;
                    }
                } else if i < b.len() && b[i] == b'.' {
                    i += 1;
                    while i < b.len() && b[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                out.push(Tok::Number);
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_' || b[i] == b'$') {
                    i += 1;
                }
                out.push(Tok::Ident(src[start..i].to_string()));
            }
            _ => {
                out.push(Tok::Punct(c));
                i += 1;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Default)]
pub struct ModuleInfo {
    pub name: String,
    /// `(module type, instance name)` pairs.
    pub instances: Vec<(String, String)>,
    pub declared: BTreeSet<String>,
}

impl ModuleInfo {
    pub fn count_of(&self, module_type: &str) -> usize {
        self.instances.iter().filter(|(t, _)| t == module_type).count()
    }
}

#[derive(Debug, Clone, Default)]
pub struct Scan {
    pub modules: Vec<ModuleInfo>,
}

impl Scan {
    pub fn module(&self, name: &str) -> Option<&ModuleInfo> {
        self.modules.iter().find(|m| m.name == name)
    }
}

fn ident(t: Option<&Tok>) -> Option<&str> {
    match t {
        Some(Tok::Ident(s)) => Some(s),
        _ => None,
    }
}

fn skip_group(toks: &[Tok], mut i: usize, open: char, close: char) -> Result<usize, String> {
    let mut depth = 0i32;
    while i < toks.len() {
        match toks[i] {
            Tok::Punct(c) if c == open => depth += 1,
            Tok::Punct(c) if c == close => {
                depth -= 1;
                if depth == 0 {
                    return Ok(i + 1);
                }
            }
            _ => {}
        }
        i += 1;
    }
    Err(format!("unbalanced `{open}`"))
}

/// Scan one module body `toks[start..end]` (starting at the `module` keyword).
fn scan_module(toks: &[Tok]) -> Result<ModuleInfo, String> {
    let name = ident(toks.get(1)).ok_or("module without a name")?.to_string();
    let mut info = ModuleInfo {
        name: name.clone(),
        ..Default::default()
    };
    // First declaration position of each name.
    let mut decl_at: HashMap<String, usize> = HashMap::new();
    let mut module_refs: BTreeSet<usize> = BTreeSet::new();
    let mut decl_sites: BTreeSet<usize> = BTreeSet::new();
    let mut declare = |n: &str, at: usize, info: &mut ModuleInfo, sites: &mut BTreeSet<usize>| {
        decl_at.entry(n.to_string()).or_insert(at);
        info.declared.insert(n.to_string());
        sites.insert(at);
    };

    let mut i = 2;
    while i < toks.len() {
        match &toks[i] {
            Tok::Ident(kw) if DECL.contains(&kw.as_str()) => {
                i += 1;
                loop {
                    while let Some(k) = ident(toks.get(i)).filter(|k| matches!(*k, "wire" | "reg" | "signed")) {
                        let _ = k;
                        i += 1;
                    }
                    if toks.get(i) == Some(&Tok::Punct('[')) {
                        i = skip_group(toks, i, '[', ']')?;
                    }
                    let n = ident(toks.get(i)).ok_or_else(|| format!("{name}: declaration without a name"))?;
                    if is_kw(n) {
                        return Err(format!("{name}: keyword `{n}` used as a name"));
                    }
                    declare(n, i, &mut info, &mut decl_sites);
                    i += 1;
                    while toks.get(i) == Some(&Tok::Punct('[')) {
                        i = skip_group(toks, i, '[', ']')?;
                    }
                    if toks.get(i) == Some(&Tok::Punct('=')) {
                        // Initializer: runs to the next top-level `,` `;` or `)`.
                        let mut depth = 0;
                        i += 1;
                        while i < toks.len() {
                            match toks[i] {
                                Tok::Punct('(') | Tok::Punct('[') | Tok::Punct('{') => depth += 1,
                                Tok::Punct(')') | Tok::Punct(']') | Tok::Punct('}') if depth > 0 => depth -= 1,
                                Tok::Punct(',') | Tok::Punct(';') | Tok::Punct(')') if depth == 0 => break,
                                _ => {}
                            }
                            i += 1;
                        }
                    }
                    // A comma continues the list unless a new declaration keyword follows.
                    if toks.get(i) == Some(&Tok::Punct(',')) && ident(toks.get(i + 1)).is_some_and(|n| !is_kw(n)) {
                        i += 1;
                        continue;
                    }
                    break;
                }
            }
            Tok::Ident(ty) if !is_kw(ty) => {
                let next = toks.get(i + 1);
                let inst_at = if next == Some(&Tok::Punct('#')) {
                    Some(skip_group(toks, i + 2, '(', ')')?)
                } else if ident(next).is_some_and(|n| !is_kw(n)) && toks.get(i + 2) == Some(&Tok::Punct('(')) {
                    Some(i + 1)
                } else {
                    None
                };
                match inst_at {
                    Some(at) => {
                        let inst =
                            ident(toks.get(at)).ok_or_else(|| format!("{name}: instance of {ty} without a name"))?;
                        info.instances.push((ty.clone(), inst.to_string()));
                        module_refs.insert(i);
                        declare(inst, at, &mut info, &mut decl_sites);
                        i = at + 1;
                    }
                    None => i += 1,
                }
            }
            _ => i += 1,
        }
    }

    for (k, t) in toks.iter().enumerate().skip(2) {
        let Tok::Ident(n) = t else { continue };
        if is_kw(n) || module_refs.contains(&k) || decl_sites.contains(&k) {
            continue;
        }
        if k > 0 && toks[k - 1] == Tok::Punct('.') {
            continue;
        }
        match decl_at.get(n) {
            Some(&d) if d <= k => {}
            Some(_) => return Err(format!("{name}: `{n}` used before its declaration")),
            None => return Err(format!("{name}: `{n}` is not declared")),
        }
    }
    Ok(info)
}

/// Scan a set of sources that together form one design.
pub fn scan(sources: &[&str]) -> Result<Scan, String> {
    let mut scan = Scan::default();
    for src in sources {
        let toks = lex(src)?;
        for (open, close) in [('(', ')'), ('[', ']'), ('{', '}')] {
            let mut depth = 0i64;
            for t in &toks {
                match t {
                    Tok::Punct(c) if *c == open => depth += 1,
                    Tok::Punct(c) if *c == close => depth -= 1,
                    _ => {}
                }
                if depth < 0 {
                    return Err(format!("stray `{close}`"));
                }
            }
            if depth != 0 {
                return Err(format!("unbalanced `{open}{close}`"));
            }
        }
        let mut i = 0;
        while i < toks.len() {
            match ident(toks.get(i)) {
                Some("module") => {
                    let mut depth = 0i64;
                    let mut j = i + 1;
                    loop {
                        match ident(toks.get(j)) {
                            _ if j >= toks.len() => return Err("module without endmodule".into()),
                            Some("module") => return Err("nested module".into()),
                            Some("begin") => depth += 1,
                            Some("end") => {
                                depth -= 1;
                                if depth < 0 {
                                    return Err("`end` without `begin`".into());
                                }
                            }
                            Some("endmodule") => break,
                            _ => {}
                        }
                        j += 1;
                    }
                    if depth != 0 {
                        return Err(format!("{depth} unclosed `begin` blocks"));
                    }
                    scan.modules.push(scan_module(&toks[i..j])?);
                    i = j + 1;
                }
                Some("endmodule") => return Err("endmodule without module".into()),
                Some("begin") | Some("end") => return Err("begin/end outside a module".into()),
                _ => i += 1,
            }
        }
    }
    let defined: BTreeSet<&str> = scan.modules.iter().map(|m| m.name.as_str()).collect();
    if defined.len() != scan.modules.len() {
        return Err("module defined twice".into());
    }
    for m in &scan.modules {
        for (ty, _) in &m.instances {
            if !defined.contains(ty.as_str()) {
                return Err(format!("{}: instance of undefined module `{ty}`", m.name));
            }
        }
    }
    Ok(scan)
}
