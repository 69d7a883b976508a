//! Translation-canonical addressing patterns for a segmented SLM.
//!
//! A sub-array of `m x n` sites is scanned over the full array by a
//! deflector, so two patterns that differ only by a translation share one
//! SLM patch. The canonical representative of a pattern touches row 0 and
//! column 0.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::exec::Exec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Site {
    pub row: u32,
    pub col: u32,
}

impl Site {
    pub const fn new(row: u32, col: u32) -> Self {
        Site { row, col }
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

/// A non-empty set of target sites.
///
/// Patterns order by size first, then by their sorted site lists.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AddressPattern {
    sites: BTreeSet<Site>,
}

impl AddressPattern {
    pub fn new(sites: impl IntoIterator<Item = Site>) -> Result<Self> {
        let sites: BTreeSet<Site> = sites.into_iter().collect();
        if sites.is_empty() {
            return Err(Error::domain("address pattern must contain at least one site"));
        }
        Ok(AddressPattern { sites })
    }

    /// Builds a pattern from `(row, col)` pairs.
    pub fn from_pairs(pairs: &[(u32, u32)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(r, c)| Site::new(r, c)))
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        self.sites.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn contains(&self, site: Site) -> bool {
        self.sites.contains(&site)
    }

    /// Rows and columns spanned by the pattern.
    pub fn extent(&self) -> (u32, u32) {
        let (r0, c0) = self.min_corner();
        let r1 = self.sites.iter().map(|s| s.row).max().unwrap_or(0);
        let c1 = self.sites.iter().map(|s| s.col).max().unwrap_or(0);
        (r1 - r0 + 1, c1 - c0 + 1)
    }

    fn min_corner(&self) -> (u32, u32) {
        let r = self.sites.iter().map(|s| s.row).min().unwrap_or(0);
        let c = self.sites.iter().map(|s| s.col).min().unwrap_or(0);
        (r, c)
    }

    pub fn is_canonical(&self) -> bool {
        self.min_corner() == (0, 0)
    }
}

impl PartialOrd for AddressPattern {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for AddressPattern {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.sites.iter().cmp(other.sites.iter()))
    }
}

impl fmt::Display for AddressPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.sites.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

/// Shifts `pattern` so its minimum row and column are zero. Returns the
/// canonical pattern and the removed `(row, col)` offset.
pub fn canonicalize(pattern: &AddressPattern) -> Result<(AddressPattern, (u32, u32))> {
    if pattern.is_empty() {
        return Err(Error::domain("cannot canonicalize an empty pattern"));
    }
    let (r0, c0) = pattern.min_corner();
    let sites = pattern
        .sites
        .iter()
        .map(|s| Site::new(s.row - r0, s.col - c0))
        .collect();
    Ok((AddressPattern { sites }, (r0, c0)))
}

/// Exact binomial coefficient; zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) at every step.
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

fn check_range(m: u32, n: u32, k: u32) -> Result<()> {
    if m == 0 || n == 0 {
        return Err(Error::domain(format!("sub-array {m}x{n} must be at least 1x1")));
    }
    if k == 0 || k as u64 > m as u64 * n as u64 {
        return Err(Error::domain(format!(
            "k = {k} outside 1..={} for a {m}x{n} sub-array",
            m as u64 * n as u64
        )));
    }
    Ok(())
}

/// Number of distinct `k`-site patterns in an `m x n` sub-array up to
/// translation (patterns touching the top row and the left column).
pub fn partition_count(m: u32, n: u32, k: u32) -> Result<u128> {
    check_range(m, n, k)?;
    let (m, n, k) = (m as u64, n as u64, k as u64);
    let total = binomial(m * n, k) + binomial((m - 1) * (n - 1), k);
    let missing = binomial((m - 1) * n, k) + binomial(m * (n - 1), k);
    Ok(total - missing)
}

/// Patches needed to hold every pattern of 1 to `k_max` sites.
pub fn partition_total(m: u32, n: u32, k_max: u32) -> Result<u128> {
    check_range(m, n, k_max)?;
    (1..=k_max).map(|k| partition_count(m, n, k)).sum()
}

/// Every canonical `k`-site pattern of an `m x n` sub-array, in
/// lexicographic order of the sorted site lists.
pub fn enumerate_canonical_patterns(m: u32, n: u32, k: u32) -> Result<Vec<AddressPattern>> {
    enumerate_canonical_patterns_with(m, n, k, Exec::default())
}

pub fn enumerate_canonical_patterns_with(
    m: u32,
    n: u32,
    k: u32,
    exec: Exec,
) -> Result<Vec<AddressPattern>> {
    check_range(m, n, k)?;
    let cells = (m * n) as usize;
    let k = k as usize;
    // Sites are indexed row-major, so index order equals site order. Every
    // canonical pattern contains a row-0 site, hence its first site is in row 0.
    let first: Vec<usize> = (0..(n as usize).min(cells + 1 - k)).collect();
    let chunks = exec.map(&first, |&f| {
        let mut out = Vec::new();
        let mut combo = vec![f];
        extend_combos(&mut combo, k, cells, n as usize, &mut out);
        out
    });
    Ok(chunks.into_iter().flatten().collect())
}

fn extend_combos(
    combo: &mut Vec<usize>,
    k: usize,
    cells: usize,
    n: usize,
    out: &mut Vec<AddressPattern>,
) {
    if combo.len() == k {
        if combo.iter().any(|&i| i % n == 0) {
            let sites = combo
                .iter()
                .map(|&i| Site::new((i / n) as u32, (i % n) as u32))
                .collect();
            out.push(AddressPattern { sites });
        }
        return;
    }
    let next = combo[combo.len() - 1] + 1;
    let remaining = k - combo.len();
    for i in next..=cells - remaining {
        combo.push(i);
        extend_combos(combo, k, cells, n, out);
        combo.pop();
    }
}

/// Mapping from canonical pattern to SLM patch index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatchCatalog {
    sub_m: u32,
    sub_n: u32,
    k_max: u32,
    entries: BTreeMap<AddressPattern, usize>,
    by_index: Vec<AddressPattern>,
}

impl PatchCatalog {
    fn from_patterns(sub_m: u32, sub_n: u32, k_max: u32, patterns: Vec<AddressPattern>) -> Self {
        let entries = patterns
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i))
            .collect();
        PatchCatalog {
            sub_m,
            sub_n,
            k_max,
            entries,
            by_index: patterns,
        }
    }

    pub fn sub_m(&self) -> u32 {
        self.sub_m
    }

    pub fn sub_n(&self) -> u32 {
        self.sub_n
    }

    /// Largest pattern size for which every pattern is present.
    pub fn k_max(&self) -> u32 {
        self.k_max
    }

    pub fn len(&self) -> usize {
        self.by_index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_index.is_empty()
    }

    /// Entries beyond the complete levels (from a filled catalog).
    pub fn partial_len(&self) -> usize {
        self.by_index.iter().filter(|p| p.len() > self.k_max as usize).count()
    }

    /// Patterns in patch-index order.
    pub fn patterns(&self) -> &[AddressPattern] {
        &self.by_index
    }

    pub fn pattern(&self, index: usize) -> Option<&AddressPattern> {
        self.by_index.get(index)
    }

    pub fn index_of(&self, canonical: &AddressPattern) -> Option<usize> {
        self.entries.get(canonical).copied()
    }

    /// Patch index and translation offset for an arbitrary pattern.
    pub fn lookup(&self, pattern: &AddressPattern) -> Result<(usize, (u32, u32))> {
        let (canonical, offset) = canonicalize(pattern)?;
        let (rows, cols) = canonical.extent();
        if rows > self.sub_m || cols > self.sub_n {
            return Err(Error::NotAddressable {
                sub_m: self.sub_m,
                sub_n: self.sub_n,
                rows,
                cols,
            });
        }
        match self.entries.get(&canonical) {
            Some(&i) => Ok((i, offset)),
            None => Err(Error::CatalogMiss(canonical)),
        }
    }

    /// Text form: a header line followed by `index; k; (r,c) (r,c) ...`.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "catalog m={} n={} k_max={} count={}\n",
            self.sub_m,
            self.sub_n,
            self.k_max,
            self.len()
        );
        for (i, p) in self.by_index.iter().enumerate() {
            s.push_str(&format!("{i}; {}; {p}\n", p.len()));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "missing catalog header"))?;
        let mut fields = header.split_whitespace();
        if fields.next() != Some("catalog") {
            return Err(Error::parse(hline, "header must start with 'catalog'"));
        }
        let mut get = |key: &str| -> Result<u64> {
            let f = fields
                .next()
                .ok_or_else(|| Error::parse(hline, format!("missing {key}=")))?;
            let v = f
                .strip_prefix(key)
                .and_then(|r| r.strip_prefix('='))
                .ok_or_else(|| Error::parse(hline, format!("expected {key}=, found '{f}'")))?;
            v.parse()
                .map_err(|_| Error::parse(hline, format!("bad value for {key}: '{v}'")))
        };
        let (m, n, k_max, count) = (get("m")? as u32, get("n")? as u32, get("k_max")? as u32, get("count")?);
        let mut patterns = Vec::with_capacity(count as usize);
        for (ln, line) in lines {
            let parts: Vec<&str> = line.splitn(3, ';').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(Error::parse(ln, "expected 'index; k; sites'"));
            }
            let idx: usize = parts[0]
                .parse()
                .map_err(|_| Error::parse(ln, format!("bad index '{}'", parts[0])))?;
            if idx != patterns.len() {
                return Err(Error::parse(ln, format!("index {idx} out of sequence")));
            }
            let k: usize = parts[1]
                .parse()
                .map_err(|_| Error::parse(ln, format!("bad k '{}'", parts[1])))?;
            let sites = parse_sites(parts[2]).map_err(|msg| Error::parse(ln, msg))?;
            let pattern = AddressPattern::new(sites).map_err(|e| Error::parse(ln, e.to_string()))?;
            if pattern.len() != k {
                return Err(Error::parse(ln, format!("k = {k} but {} sites listed", pattern.len())));
            }
            if !pattern.is_canonical() {
                return Err(Error::parse(ln, "pattern is not canonical"));
            }
            let (rows, cols) = pattern.extent();
            if rows > m || cols > n {
                return Err(Error::parse(ln, format!("pattern exceeds {m}x{n}")));
            }
            patterns.push(pattern);
        }
        if patterns.len() as u64 != count {
            return Err(Error::parse(
                hline,
                format!("header count {count} but {} entries", patterns.len()),
            ));
        }
        let catalog = PatchCatalog::from_patterns(m, n, k_max, patterns);
        if catalog.entries.len() != catalog.by_index.len() {
            return Err(Error::parse(hline, "duplicate patterns in catalog"));
        }
        Ok(catalog)
    }
}

/// Parses a whitespace-separated list of `(r,c)` sites.
pub fn parse_sites(text: &str) -> std::result::Result<Vec<Site>, String> {
    let mut out = Vec::new();
    let mut rest = text.trim();
    while !rest.is_empty() {
        let body = rest
            .strip_prefix('(')
            .ok_or_else(|| format!("expected '(' at '{rest}'"))?;
        let close = body.find(')').ok_or("unterminated site")?;
        let (r, c) = body[..close]
            .split_once(',')
            .ok_or_else(|| format!("site '{}' needs row,col", &body[..close]))?;
        let row = r.trim().parse().map_err(|_| format!("bad row '{r}'"))?;
        let col = c.trim().parse().map_err(|_| format!("bad col '{c}'"))?;
        out.push(Site::new(row, col));
        rest = body[close + 1..].trim_start();
    }
    Ok(out)
}

/// Catalog holding every pattern with 1 to `k_max` sites.
pub fn build_catalog(m: u32, n: u32, k_max: u32, available_partitions: u64) -> Result<PatchCatalog> {
    if available_partitions == 0 {
        return Err(Error::domain("at least one partition must be available"));
    }
    let required = partition_total(m, n, k_max)?;
    if required > available_partitions as u128 {
        return Err(Error::Capacity {
            what: "catalog patches",
            required,
            available: available_partitions as u128,
        });
    }
    let mut patterns = Vec::with_capacity(required as usize);
    for k in 1..=k_max {
        patterns.extend(enumerate_canonical_patterns(m, n, k)?);
    }
    Ok(PatchCatalog::from_patterns(m, n, k_max, patterns))
}

/// Catalog with as many complete levels as fit, then spare patches filled
/// with the next level's patterns, taken from `preferred` in order and then
/// in lexicographic order.
pub fn fill_catalog(
    m: u32,
    n: u32,
    available_partitions: u64,
    preferred: &[AddressPattern],
) -> Result<PatchCatalog> {
    if available_partitions == 0 {
        return Err(Error::domain("at least one partition must be available"));
    }
    check_range(m, n, 1)?;
    let cells = m * n;
    let mut k_max = 0;
    let mut used = 0u128;
    while k_max < cells {
        let next = partition_count(m, n, k_max + 1)?;
        if used + next > available_partitions as u128 {
            break;
        }
        used += next;
        k_max += 1;
    }
    let mut patterns = Vec::with_capacity(available_partitions.min(used as u64 + 1024) as usize);
    for k in 1..=k_max {
        patterns.extend(enumerate_canonical_patterns(m, n, k)?);
    }
    if k_max < cells {
        let spare = (available_partitions as u128 - used) as usize;
        let level = k_max as usize + 1;
        let mut chosen: BTreeSet<AddressPattern> = BTreeSet::new();
        let mut extra = Vec::new();
        for p in preferred {
            if extra.len() == spare {
                break;
            }
            let (c, _) = canonicalize(p)?;
            let (rows, cols) = c.extent();
            if c.len() == level && rows <= m && cols <= n && chosen.insert(c.clone()) {
                extra.push(c);
            }
        }
        if extra.len() < spare {
            for p in enumerate_canonical_patterns(m, n, level as u32)? {
                if extra.len() == spare {
                    break;
                }
                if !chosen.contains(&p) {
                    extra.push(p);
                }
            }
        }
        patterns.extend(extra);
    }
    Ok(PatchCatalog::from_patterns(m, n, k_max, patterns))
}
