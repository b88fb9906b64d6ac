//! Procedure-call network extraction from C source trees.
//!
//! This is deliberately a lexer-grade heuristic, not a C parser: kernel-style
//! sources full of macros and conditional compilation defeat strict parsing.
//! The pipeline per file is: blank out comments, string/char literals, and
//! preprocessor lines (preserving byte positions), find function definitions
//! as `name (...) {` at brace depth zero, then scan each body for
//! `identifier (` call sites. Name resolution is closed-world: an edge is
//! emitted only when the callee name is defined somewhere in the tree;
//! everything else is tallied, not guessed. Calls hidden behind
//! function-like macros or function pointers are missed by construction, and
//! files the heuristic cannot handle are skipped and reported rather than
//! aborting the run.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::Range;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;

/// Identifiers that look like calls or definitions lexically but are C
/// control keywords/operators.
const KEYWORDS: [&str; 8] = [
    "if", "while", "for", "switch", "return", "sizeof", "do", "else",
];

#[derive(Debug, Clone)]
pub struct ExtractOptions {
    /// File extensions to scan (no dot), compared case-sensitively.
    pub extensions: Vec<String>,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self {
            extensions: vec!["c".into(), "h".into()],
        }
    }
}

/// What the extractor did, for auditing the heuristic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtractionReport {
    pub n_procedures: usize,
    pub n_calls: usize,
    pub skipped_files: Vec<(PathBuf, String)>,
    /// Distinct (caller, callee-name) pairs whose name resolves to no
    /// definition in the tree (library calls, macros, typos).
    pub unresolved_call_names: usize,
}

fn is_ident_start(c: u8) -> bool {
    c.is_ascii_alphabetic() || c == b'_'
}

fn is_ident_char(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_'
}

fn is_keyword(name: &str) -> bool {
    KEYWORDS.contains(&name)
}

/// Replace comments and string/char literals with spaces (newlines kept, so
/// line/column positions survive), then blank preprocessor directive lines
/// and their backslash continuations. Output has the same length as the
/// input. A string not closed on its line is ended at the newline — lenient,
/// since macro-heavy code sometimes has quotes the lexer cannot pair — but
/// an unterminated block comment is a hard error at its opening position.
pub fn strip_noise(source: &str) -> Result<String> {
    #[derive(PartialEq)]
    enum St {
        Code,
        Line,
        Block,
        Str,
        Ch,
    }
    let b = source.as_bytes();
    let mut out = b.to_vec();
    let mut st = St::Code;
    let mut line = 1usize;
    let mut col = 1usize;
    let (mut open_line, mut open_col) = (0usize, 0usize);
    let mut i = 0;
    while i < b.len() {
        let c = b[i];
        let two = if i + 1 < b.len() { Some(b[i + 1]) } else { None };
        match st {
            St::Code => {
                if c == b'/' && two == Some(b'/') {
                    st = St::Line;
                    out[i] = b' ';
                    out[i + 1] = b' ';
                    i += 2;
                    col += 2;
                    continue;
                }
                if c == b'/' && two == Some(b'*') {
                    st = St::Block;
                    (open_line, open_col) = (line, col);
                    out[i] = b' ';
                    out[i + 1] = b' ';
                    i += 2;
                    col += 2;
                    continue;
                }
                if c == b'"' {
                    st = St::Str;
                    out[i] = b' ';
                } else if c == b'\'' {
                    st = St::Ch;
                    out[i] = b' ';
                }
            }
            St::Line => {
                if c == b'\n' {
                    st = St::Code;
                } else {
                    out[i] = b' ';
                }
            }
            St::Block => {
                if c == b'*' && two == Some(b'/') {
                    out[i] = b' ';
                    out[i + 1] = b' ';
                    st = St::Code;
                    i += 2;
                    col += 2;
                    continue;
                }
                if c != b'\n' {
                    out[i] = b' ';
                }
            }
            St::Str | St::Ch => {
                let quote = if st == St::Str { b'"' } else { b'\'' };
                if c == b'\\' && two.is_some() && two != Some(b'\n') {
                    out[i] = b' ';
                    out[i + 1] = b' ';
                    i += 2;
                    col += 2;
                    continue;
                }
                if c == quote {
                    st = St::Code;
                    out[i] = b' ';
                } else if c == b'\n' {
                    st = St::Code;
                } else {
                    out[i] = b' ';
                }
            }
        }
        if c == b'\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
        i += 1;
    }
    if st == St::Block {
        return Err(Error::Lex {
            line: open_line,
            col: open_col,
            msg: "unterminated block comment".into(),
        });
    }

    // Second pass: blank `#...` lines, following backslash continuations.
    let mut i = 0;
    let mut continuation = false;
    while i < out.len() {
        let end = out[i..]
            .iter()
            .position(|&c| c == b'\n')
            .map_or(out.len(), |p| i + p);
        let first = out[i..end]
            .iter()
            .find(|&&c| c != b' ' && c != b'\t' && c != b'\r');
        if continuation || first == Some(&b'#') {
            let last = out[i..end]
                .iter()
                .rev()
                .find(|&&c| c != b' ' && c != b'\t' && c != b'\r');
            continuation = last == Some(&b'\\');
            for slot in &mut out[i..end] {
                if *slot != b'\r' {
                    *slot = b' ';
                }
            }
        } else {
            continuation = false;
        }
        i = end + 1;
    }
    Ok(String::from_utf8_lossy(&out).into_owned())
}

/// A function definition located in noise-stripped source: its name and the
/// byte span of the balanced `{ ... }` body (braces included).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Definition {
    pub name: String,
    pub body: Range<usize>,
}

fn skip_ws_back(b: &[u8], mut j: usize) -> usize {
    while j > 0 && (b[j - 1] as char).is_ascii_whitespace() {
        j -= 1;
    }
    j
}

/// Walk back over one balanced `(...)` group ending at j (exclusive);
/// returns the index of the opening parenthesis.
fn match_parens_back(b: &[u8], j: usize) -> Option<usize> {
    debug_assert_eq!(b[j - 1], b')');
    let mut depth = 0i64;
    let mut k = j;
    while k > 0 {
        k -= 1;
        match b[k] {
            b')' => depth += 1,
            b'(' => {
                depth -= 1;
                if depth == 0 {
                    return Some(k);
                }
            }
            _ => {}
        }
    }
    None
}

/// Does a function definition end right before the `{` at brace_idx? Walks
/// backward over `name ( ... )`, stepping over annotation macros of the
/// shape `) annot(...)` between the parameter list and the brace (kernel
/// attribute/sparse markers), and rejects keywords. K&R-style definitions
/// (parameter declarations between `)` and `{`) are not recognized.
fn definition_name_before(b: &[u8], brace_idx: usize) -> Option<String> {
    let mut j = brace_idx;
    for _ in 0..8 {
        j = skip_ws_back(b, j);
        if j == 0 || b[j - 1] != b')' {
            return None;
        }
        let open = match_parens_back(b, j)?;
        let end = skip_ws_back(b, open);
        let mut start = end;
        while start > 0 && is_ident_char(b[start - 1]) {
            start -= 1;
        }
        if start == end {
            return None; // cast, parenthesized declarator, expression...
        }
        let name = std::str::from_utf8(&b[start..end]).ok()?;
        if b[start].is_ascii_digit() {
            return None;
        }
        let before = skip_ws_back(b, start);
        if before > 0 && b[before - 1] == b')' {
            // `) name(...) {` — name annotates a parameter list further
            // left; keep walking.
            j = start;
            continue;
        }
        if is_keyword(name) {
            return None;
        }
        return Some(name.to_string());
    }
    None
}

/// Find all function definitions in noise-stripped source. Braces that
/// never balance (or a stray closer) make the whole file unusable for span
/// attribution, so they are an error — callers record the file as skipped.
pub fn find_definitions(source: &str) -> Result<Vec<Definition>> {
    let b = source.as_bytes();
    let mut depth = 0i64;
    let mut defs = Vec::new();
    let mut pending: Option<(String, usize)> = None;
    for (i, &c) in b.iter().enumerate() {
        match c {
            b'{' => {
                if depth == 0 {
                    if let Some(name) = definition_name_before(b, i) {
                        pending = Some((name, i));
                    }
                }
                depth += 1;
            }
            b'}' => {
                depth -= 1;
                if depth < 0 {
                    let line = 1 + source[..i].matches('\n').count();
                    return Err(Error::Lex {
                        line,
                        col: 0,
                        msg: "unbalanced braces: stray '}'".into(),
                    });
                }
                if depth == 0 {
                    if let Some((name, start)) = pending.take() {
                        defs.push(Definition {
                            name,
                            body: start..i + 1,
                        });
                    }
                }
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(Error::Lex {
            line: 1 + source.matches('\n').count(),
            col: 0,
            msg: format!("unbalanced braces: {depth} unclosed"),
        });
    }
    Ok(defs)
}

/// Distinct identifiers used as `name (`-style calls inside a body span of
/// noise-stripped source. Keywords and member accesses (`x.f()`, `p->f()`)
/// are not calls.
fn scan_calls(body: &str) -> BTreeSet<String> {
    let b = body.as_bytes();
    let mut out = BTreeSet::new();
    let mut i = 0;
    while i < b.len() {
        if !is_ident_start(b[i]) || (i > 0 && is_ident_char(b[i - 1])) {
            i += 1;
            continue;
        }
        let start = i;
        while i < b.len() && is_ident_char(b[i]) {
            i += 1;
        }
        let mut k = i;
        while k < b.len() && (b[k] as char).is_ascii_whitespace() {
            k += 1;
        }
        if k >= b.len() || b[k] != b'(' {
            continue;
        }
        let name = std::str::from_utf8(&b[start..i]).unwrap();
        if is_keyword(name) {
            continue;
        }
        let before = skip_ws_back(b, start);
        if before > 0 && b[before - 1] == b'.' {
            continue;
        }
        if before > 1 && b[before - 1] == b'>' && b[before - 2] == b'-' {
            continue;
        }
        out.insert(name.to_string());
    }
    out
}

/// Definitions and their called names from one file.
type FileScan = Vec<(String, BTreeSet<String>)>;

fn scan_file(path: &Path) -> std::result::Result<FileScan, String> {
    let raw = std::fs::read(path).map_err(|e| e.to_string())?;
    let text = String::from_utf8_lossy(&raw);
    let stripped = strip_noise(&text).map_err(|e| e.to_string())?;
    let defs = find_definitions(&stripped).map_err(|e| e.to_string())?;
    Ok(defs
        .into_iter()
        .map(|d| {
            // exclude the braces so the body's own header can't re-match
            let inner = &stripped[d.body.start + 1..d.body.end - 1];
            (d.name, scan_calls(inner))
        })
        .collect())
}

/// Walk a source tree and build the procedure-call network: one node per
/// uniquely named function definition (same name in several files collapses
/// onto one node, as a linker would), one edge per caller→callee pair that
/// resolves to a definition. Nodes are ordered lexicographically by name, so
/// the graph is identical across runs and machines.
pub fn extract_pcn(
    root: &Path,
    options: &ExtractOptions,
) -> Result<(DirectedGraph, ExtractionReport)> {
    std::fs::metadata(root)?; // root itself must exist and be readable

    let mut paths = Vec::new();
    let mut skipped: Vec<(PathBuf, String)> = Vec::new();
    for entry in WalkDir::new(root).follow_links(false) {
        match entry {
            Ok(e) => {
                if !e.file_type().is_file() {
                    continue;
                }
                let matches = e
                    .path()
                    .extension()
                    .and_then(|x| x.to_str())
                    .is_some_and(|x| options.extensions.iter().any(|w| w == x));
                if matches {
                    paths.push(e.into_path());
                }
            }
            Err(err) => {
                let p = err
                    .path()
                    .map_or_else(|| root.to_path_buf(), Path::to_path_buf);
                skipped.push((p, err.to_string()));
            }
        }
    }
    paths.sort();

    let scans: Vec<(PathBuf, std::result::Result<FileScan, String>)> = paths
        .into_par_iter()
        .map(|p| {
            let s = scan_file(&p);
            (p, s)
        })
        .collect();

    // merge phase, in sorted path order
    let mut instances: Vec<(String, BTreeSet<String>)> = Vec::new();
    for (path, res) in scans {
        match res {
            Ok(s) => instances.extend(s),
            Err(reason) => skipped.push((path, reason)),
        }
    }
    let names: BTreeSet<&str> = instances.iter().map(|(n, _)| n.as_str()).collect();
    if names.is_empty() {
        return Err(Error::EmptyExtraction {
            root: root.to_path_buf(),
        });
    }
    let index: BTreeMap<&str, usize> = names
        .iter()
        .enumerate()
        .map(|(i, &n)| (n, i))
        .collect();

    let mut edges = Vec::new();
    let mut unresolved: BTreeSet<(usize, &str)> = BTreeSet::new();
    for (caller, calls) in &instances {
        let c = index[caller.as_str()];
        for callee in calls {
            match index.get(callee.as_str()) {
                Some(&t) => edges.push((c, t)),
                None => {
                    unresolved.insert((c, callee.as_str()));
                }
            }
        }
    }
    let labels: Vec<String> = names.iter().map(|n| n.to_string()).collect();
    let n = labels.len();
    let unresolved_call_names = unresolved.len();
    let graph = DirectedGraph::from_edges(n, edges, Some(labels))?;
    let report = ExtractionReport {
        n_procedures: graph.n_nodes(),
        n_calls: graph.n_edges(),
        skipped_files: skipped,
        unresolved_call_names,
    };
    Ok((graph, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    #[test]
    fn strip_replaces_noise_with_spaces() {
        let s = strip_noise("a /* x */ b").unwrap();
        assert_eq!(s.len(), 11);
        assert_eq!(&s[0..1], "a");
        assert_eq!(&s[10..11], "b");
        assert!(s[1..10].chars().all(|c| c == ' '));

        assert_eq!(strip_noise("\"f()\"").unwrap(), "     ");
        assert_eq!(strip_noise("x = 'a';").unwrap(), "x =    ;");
        assert_eq!(strip_noise("y // call f()\nz").unwrap(), "y            \nz");
    }

    #[test]
    fn strip_blanks_directives_and_continuations() {
        let src = "#define CALL g()\nint a;\n#define M(x) \\\n    f(x)\nint b;\n";
        let s = strip_noise(src).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0].trim(), "");
        assert_eq!(lines[1], "int a;");
        assert_eq!(lines[2].trim(), "");
        assert_eq!(lines[3].trim(), "", "continuation line must be blanked");
        assert_eq!(lines[4], "int b;");
    }

    #[test]
    fn strip_preserves_line_structure() {
        let src = "a\n/* one\ntwo\nthree */\nb";
        let s = strip_noise(src).unwrap();
        assert_eq!(s.lines().count(), 5);
        assert_eq!(s.lines().nth(4), Some("b"));
    }

    #[test]
    fn strip_handles_escapes_and_lenient_strings() {
        assert_eq!(strip_noise(r#""a\"b()""#).unwrap(), "        ");
        assert_eq!(strip_noise(r"'\''").unwrap(), "    ");
        // unterminated string ends at the newline; code resumes after
        let s = strip_noise("x = \"abc\ng();\n").unwrap();
        assert!(s.contains("g();"));
    }

    #[test]
    fn unterminated_comment_is_positioned_error() {
        let err = strip_noise("int x;\n  /* never closed\n\n").unwrap_err();
        match err {
            Error::Lex { line, col, .. } => {
                assert_eq!(line, 2);
                assert_eq!(col, 3);
            }
            other => panic!("wrong error: {other:?}"),
        }
    }

    #[test]
    fn definitions_basic() {
        let src = strip_noise("int f(int x) { return x; }").unwrap();
        let defs = find_definitions(&src).unwrap();
        assert_eq!(defs.len(), 1);
        assert_eq!(defs[0].name, "f");
        assert_eq!(&src[defs[0].body.clone()], "{ return x; }");
    }

    #[test]
    fn definitions_exclude_non_functions() {
        let cases = [
            "if (x) { }",
            "struct s v = { 1 };",
            "int a[] = {1, 2};",
            "enum e { A, B };",
            "while (1) { }",
            "int f(a) int a; { }", // K&R: intentionally not recognized
        ];
        for c in cases {
            let s = strip_noise(c).unwrap();
            assert!(find_definitions(&s).unwrap().is_empty(), "case: {c}");
        }
    }

    #[test]
    fn definitions_step_over_annotations() {
        let s = strip_noise("static int f(void) __attribute__((noinline)) { return 0; }").unwrap();
        let defs = find_definitions(&s).unwrap();
        assert_eq!(defs.len(), 1);
        assert_eq!(defs[0].name, "f");
    }

    #[test]
    fn two_functions_and_bodies() {
        let s = strip_noise("void a(void){b();} void b(void){}").unwrap();
        let defs = find_definitions(&s).unwrap();
        assert_eq!(defs.len(), 2);
        assert_eq!(defs[0].name, "a");
        assert_eq!(defs[1].name, "b");
    }

    #[test]
    fn unbalanced_braces_error() {
        assert!(find_definitions("int f(void) { if (x) { }").is_err());
        assert!(find_definitions("}").is_err());
    }

    #[test]
    fn call_scanning_rules() {
        let body = "g(); h (1); x.m(); p->n(); obj . q(); while (a) { r(); } sizeof(int); g();";
        let calls = scan_calls(body);
        let want: BTreeSet<String> =
            ["g", "h", "r"].iter().map(|s| s.to_string()).collect();
        assert_eq!(calls, want);
    }

    fn write_tree(files: &[(&str, &str)]) -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        for (name, content) in files {
            let p = dir.path().join(name);
            if let Some(parent) = p.parent() {
                fs::create_dir_all(parent).unwrap();
            }
            fs::write(p, content).unwrap();
        }
        dir
    }

    #[test]
    fn extract_two_function_tree() {
        let dir = write_tree(&[("m.c", "void a(void){b();}\nvoid b(void){}\n")]);
        let (g, rep) = extract_pcn(dir.path(), &ExtractOptions::default()).unwrap();
        assert_eq!(g.n_nodes(), 2);
        assert_eq!(g.labels().unwrap(), &["a".to_string(), "b".to_string()]);
        assert_eq!(g.out_edges(0), &[1]);
        assert_eq!(g.out_edges(1), &[] as &[usize]);
        assert_eq!(rep.n_procedures, 2);
        assert_eq!(rep.n_calls, 1);
        assert_eq!(rep.unresolved_call_names, 0);
        assert!(rep.skipped_files.is_empty());
    }

    #[test]
    fn self_loop_kept() {
        let dir = write_tree(&[("r.c", "void f(void){f();}\n")]);
        let (g, _) = extract_pcn(dir.path(), &ExtractOptions::default()).unwrap();
        assert_eq!(g.n_nodes(), 1);
        assert_eq!(g.out_edges(0), &[0]);
    }

    #[test]
    fn unresolved_names_counted_not_linked() {
        let dir = write_tree(&[(
            "u.c",
            "void a(void){printf(\"x\"); printf(\"y\"); puts(\"z\");}\nvoid b(void){printf(\"w\");}\n",
        )]);
        let (g, rep) = extract_pcn(dir.path(), &ExtractOptions::default()).unwrap();
        assert_eq!(g.n_edges(), 0);
        // distinct (caller, name) pairs: (a,printf), (a,puts), (b,printf)
        assert_eq!(rep.unresolved_call_names, 3);
    }

    #[test]
    fn repeated_calls_dedup_to_one_edge() {
        let dir = write_tree(&[(
            "d.c",
            "void b(void){}\nvoid c(void){}\nvoid a(void){b();b();b();c();}\n",
        )]);
        let (g, _) = extract_pcn(dir.path(), &ExtractOptions::default()).unwrap();
        let a = g.labels().unwrap().iter().position(|l| l == "a").unwrap();
        assert_eq!(g.out_degree(a), 2);
    }

    #[test]
    fn same_name_across_files_is_one_node() {
        let dir = write_tree(&[
            ("one.c", "void shared(void){x();}\nvoid x(void){}\n"),
            ("two.c", "void shared(void){y();}\nvoid y(void){}\n"),
        ]);
        let (g, rep) = extract_pcn(dir.path(), &ExtractOptions::default()).unwrap();
        assert_eq!(rep.n_procedures, 3);
        let s = g.labels().unwrap().iter().position(|l| l == "shared").unwrap();
        assert_eq!(g.out_degree(s), 2, "union of both bodies' edges");
    }

    #[test]
    fn calls_in_strings_comments_directives_ignored() {
        let dir = write_tree(&[(
            "s.c",
            "#define M a()\nvoid a(void){}\nvoid b(void){ /* a() */ char *s = \"a()\"; }\n",
        )]);
        let (g, rep) = extract_pcn(dir.path(), &ExtractOptions::default()).unwrap();
        assert_eq!(g.n_edges(), 0);
        assert_eq!(rep.unresolved_call_names, 0);
    }

    #[test]
    fn bad_file_skipped_good_files_survive() {
        let dir = write_tree(&[
            ("ok.c", "void a(void){b();}\nvoid b(void){}\n"),
            ("bad.c", "void broken(void) { /* never closed\n"),
        ]);
        let (g, rep) = extract_pcn(dir.path(), &ExtractOptions::default()).unwrap();
        assert_eq!(g.n_nodes(), 2);
        assert_eq!(rep.skipped_files.len(), 1);
        assert!(rep.skipped_files[0].0.ends_with("bad.c"));
    }

    #[test]
    fn empty_tree_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = extract_pcn(dir.path(), &ExtractOptions::default()).unwrap_err();
        assert!(matches!(err, Error::EmptyExtraction { .. }));
        assert!(err.to_string().contains("no functions found"));
    }

    #[test]
    fn extension_filter_respected() {
        let dir = write_tree(&[
            ("a.c", "void a(void){}\n"),
            ("b.txt", "void b(void){}\n"),
        ]);
        let (g, _) = extract_pcn(dir.path(), &ExtractOptions::default()).unwrap();
        assert_eq!(g.n_nodes(), 1);
    }

    #[test]
    fn deterministic_across_runs() {
        let dir = write_tree(&[
            ("z.c", "void zf(void){af();}\n"),
            ("a.c", "void af(void){zf(); missing();}\n"),
            ("sub/m.h", "static void inl(void){af();}\n"),
        ]);
        let (g1, r1) = extract_pcn(dir.path(), &ExtractOptions::default()).unwrap();
        let (g2, r2) = extract_pcn(dir.path(), &ExtractOptions::default()).unwrap();
        assert_eq!(g1.labels(), g2.labels());
        assert_eq!(g1.n_edges(), g2.n_edges());
        assert_eq!(r1.unresolved_call_names, r2.unresolved_call_names);
        for i in 0..g1.n_nodes() {
            assert_eq!(g1.out_edges(i), g2.out_edges(i));
        }
        // lexicographic node order
        let mut sorted = g1.labels().unwrap().to_vec();
        sorted.sort();
        assert_eq!(g1.labels().unwrap(), &sorted[..]);
    }
}
