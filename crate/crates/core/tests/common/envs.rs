/// Splits `a: T, b: ref<α, 1>` at top-level commas.
pub fn bindings(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0;
    let mut cur = String::new();
    for c in s.chars() {
        match c {
            '<' => depth += 1,
            '>' => depth -= 1,
            ',' if depth == 0 => {
                out.push(cur.trim().to_string());
                cur.clear();
                continue;
            }
            _ => {}
        }
        cur.push(c);
    }
    if !cur.trim().is_empty() {
        out.push(cur.trim().to_string());
    }
    out
}

/// Environment comments in a corpus file, keyed by the code line they
/// describe. A comment on a line of its own describes the previous code line.
pub fn env_comments(src: &str) -> Vec<(u32, String)> {
    let mut out = Vec::new();
    let mut last_code = 0;
    for (i, line) in src.lines().enumerate() {
        let n = i as u32 + 1;
        let (code, comment) = match line.find("//") {
            Some(k) => (&line[..k], Some(line[k + 2..].trim())),
            None => (line, None),
        };
        if !code.trim().is_empty() {
            last_code = n;
        }
        if let Some(c) = comment {
            if c.contains(": ref<") || c.contains(": int") {
                let target = if code.trim().is_empty() { last_code } else { n };
                out.push((target, c.to_string()));
            }
        }
    }
    out
}
