//! Line-oriented instance files.
//!
//! ```text
//! [places]
//! p0 init=1
//! ps l=1
//! [transitions]
//! t label=a
//! [arcs]
//! p0 -> t : 1
//! t -> ps
//! [events]
//! a protectable gamma=1 cost=5 semantics=parikh
//! [budget]
//! W = 5
//! ```
//!
//! A `#` at the start of a token opens a comment running to the end of the
//! line, so names produced by transformations (`t##chain0`) survive a round
//! trip. Sections may come in any order but at most once each.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use num_traits::{Signed, Zero};

use crate::error::ParseError;
use crate::model::{format_rational, parse_rational, Cost, ProtectableEvent, Semantics, SppInstance};
use crate::net::{LabeledPetriNet, Marking, Nat};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Section {
    Places,
    Transitions,
    Arcs,
    Events,
    Budget,
}

impl Section {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "places" => Section::Places,
            "transitions" => Section::Transitions,
            "arcs" => Section::Arcs,
            "events" => Section::Events,
            "budget" => Section::Budget,
            _ => return None,
        })
    }
}

struct PlaceRec {
    line: usize,
    name: String,
    init: Nat,
    requirement: u64,
}

struct TransitionRec {
    line: usize,
    name: String,
    label: String,
}

struct ArcRec {
    line: usize,
    from: String,
    to: String,
    weight: u64,
}

struct EventRec {
    line: usize,
    name: String,
    protectable: Option<(u64, Cost, Semantics)>,
}

#[derive(Default)]
struct Document {
    places: Vec<PlaceRec>,
    transitions: Vec<TransitionRec>,
    arcs: Vec<ArcRec>,
    events: Vec<EventRec>,
    budget: Option<(usize, Cost)>,
    last_line: usize,
}

/// Drops a comment: `#` opening a token.
fn strip_comment(line: &str) -> &str {
    let bytes = line.as_bytes();
    for (i, &b) in bytes.iter().enumerate() {
        if b == b'#' && (i == 0 || bytes[i - 1].is_ascii_whitespace()) {
            return &line[..i];
        }
    }
    line
}

/// `[A-Za-z0-9_.-]+`, optionally joined by `##` segments from generated names.
pub fn is_identifier(s: &str) -> bool {
    !s.is_empty()
        && s.split("##")
            .all(|seg| !seg.is_empty() && seg.chars().all(|c| c.is_ascii_alphanumeric() || "_.-".contains(c)))
}

fn ident(line: usize, s: &str) -> Result<String, ParseError> {
    if is_identifier(s) {
        Ok(s.to_string())
    } else {
        Err(ParseError::new(line, format!("invalid identifier `{s}`")))
    }
}

fn split_kv(line: usize, tok: &str) -> Result<(&str, &str), ParseError> {
    tok.split_once('=')
        .filter(|(k, v)| !k.is_empty() && !v.is_empty())
        .ok_or_else(|| ParseError::new(line, format!("expected key=value, found `{tok}`")))
}

fn nat<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T, ParseError> {
    if !v.chars().all(|c| c.is_ascii_digit()) {
        return Err(ParseError::new(line, format!("{key}: expected a natural number, found `{v}`")));
    }
    v.parse()
        .map_err(|_| ParseError::new(line, format!("{key}: value `{v}` out of range")))
}

fn rational(line: usize, key: &str, v: &str) -> Result<Cost, ParseError> {
    let r = parse_rational(v).ok_or_else(|| ParseError::new(line, format!("{key}: malformed number `{v}`")))?;
    if r.is_negative() {
        return Err(ParseError::new(line, format!("{key}: must be non-negative")));
    }
    Ok(r)
}

fn parse_place(line: usize, toks: &[&str]) -> Result<PlaceRec, ParseError> {
    let name = ident(line, toks[0])?;
    let mut rec = PlaceRec {
        line,
        name,
        init: Nat::zero(),
        requirement: 0,
    };
    let mut seen = Vec::new();
    for tok in &toks[1..] {
        let (k, v) = split_kv(line, tok)?;
        if seen.contains(&k) {
            return Err(ParseError::new(line, format!("repeated attribute `{k}`")));
        }
        seen.push(k);
        match k {
            "init" => rec.init = nat(line, k, v)?,
            "l" => rec.requirement = nat(line, k, v)?,
            _ => return Err(ParseError::new(line, format!("unknown place attribute `{k}`"))),
        }
    }
    if rec.requirement > 0 && !rec.init.is_zero() {
        return Err(ParseError::new(
            line,
            format!("initially marked secret place {} (requirement {})", rec.name, rec.requirement),
        ));
    }
    Ok(rec)
}

fn parse_transition(line: usize, toks: &[&str]) -> Result<TransitionRec, ParseError> {
    let name = ident(line, toks[0])?;
    let label = match &toks[1..] {
        [] => name.clone(),
        [tok] => match split_kv(line, tok)? {
            ("label", v) => ident(line, v)?,
            (k, _) => return Err(ParseError::new(line, format!("unknown transition attribute `{k}`"))),
        },
        _ => return Err(ParseError::new(line, "expected `NAME label=EVENT`")),
    };
    Ok(TransitionRec { line, name, label })
}

fn parse_arc(line: usize, text: &str) -> Result<ArcRec, ParseError> {
    let (from, rest) = text
        .split_once("->")
        .ok_or_else(|| ParseError::new(line, "expected `NAME -> NAME : WEIGHT`"))?;
    let (to, weight) = match rest.split_once(':') {
        Some((to, w)) => (to, Some(w.trim())),
        None => (rest, None),
    };
    let weight = match weight {
        Some(w) => nat(line, "weight", w)?,
        None => 1,
    };
    if weight == 0 {
        return Err(ParseError::new(line, "arc weight must be positive"));
    }
    Ok(ArcRec {
        line,
        from: ident(line, from.trim())?,
        to: ident(line, to.trim())?,
        weight,
    })
}

fn parse_event(line: usize, toks: &[&str]) -> Result<EventRec, ParseError> {
    let name = ident(line, toks[0])?;
    match toks.get(1) {
        Some(&"unprotectable") if toks.len() == 2 => Ok(EventRec {
            line,
            name,
            protectable: None,
        }),
        Some(&"protectable") => {
            let (mut gamma, mut cost, mut semantics) = (None, None, None);
            for tok in &toks[2..] {
                let (k, v) = split_kv(line, tok)?;
                let slot_taken = match k {
                    "gamma" => gamma.replace(nat::<u64>(line, k, v)?).is_some(),
                    "cost" => cost.replace(rational(line, k, v)?).is_some(),
                    "semantics" => {
                        let s = match v {
                            "parikh" => Semantics::Parikh,
                            "indicator" => Semantics::Indicator,
                            _ => return Err(ParseError::new(line, format!("unknown semantics `{v}`"))),
                        };
                        semantics.replace(s).is_some()
                    }
                    _ => return Err(ParseError::new(line, format!("unknown event attribute `{k}`"))),
                };
                if slot_taken {
                    return Err(ParseError::new(line, format!("repeated attribute `{k}`")));
                }
            }
            let missing = |k: &str| ParseError::new(line, format!("protectable event {name} lacks `{k}`"));
            Ok(EventRec {
                protectable: Some((
                    gamma.ok_or_else(|| missing("gamma"))?,
                    cost.ok_or_else(|| missing("cost"))?,
                    semantics.ok_or_else(|| missing("semantics"))?,
                )),
                line,
                name,
            })
        }
        _ => Err(ParseError::new(
            line,
            "expected `NAME protectable gamma=.. cost=.. semantics=..` or `NAME unprotectable`",
        )),
    }
}

fn parse_budget(line: usize, text: &str) -> Result<Cost, ParseError> {
    let (k, v) = text
        .split_once('=')
        .ok_or_else(|| ParseError::new(line, "expected `W = VALUE`"))?;
    if k.trim() != "W" {
        return Err(ParseError::new(line, format!("expected `W`, found `{}`", k.trim())));
    }
    rational(line, "budget", v.trim())
}

fn parse_document(text: &str) -> Result<Document, ParseError> {
    let mut doc = Document::default();
    let mut section: Option<Section> = None;
    let mut seen: HashMap<Section, usize> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        doc.last_line = line;
        let body = strip_comment(raw).trim();
        if body.is_empty() {
            continue;
        }
        if let Some(name) = body.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let s = Section::parse(name.trim())
                .ok_or_else(|| ParseError::new(line, format!("unknown section [{}]", name.trim())))?;
            if let Some(prev) = seen.insert(s, line) {
                return Err(ParseError::new(
                    line,
                    format!("duplicate section [{}] (first at line {prev})", name.trim()),
                ));
            }
            section = Some(s);
            continue;
        }
        let toks: Vec<&str> = body.split_whitespace().collect();
        match section {
            None => return Err(ParseError::new(line, "record outside of any section")),
            Some(Section::Places) => doc.places.push(parse_place(line, &toks)?),
            Some(Section::Transitions) => doc.transitions.push(parse_transition(line, &toks)?),
            Some(Section::Arcs) => doc.arcs.push(parse_arc(line, body)?),
            Some(Section::Events) => doc.events.push(parse_event(line, &toks)?),
            Some(Section::Budget) => {
                if doc.budget.is_some() {
                    return Err(ParseError::new(line, "budget given twice"));
                }
                doc.budget = Some((line, parse_budget(line, body)?));
            }
        }
    }
    Ok(doc)
}

fn build(doc: Document) -> Result<SppInstance, ParseError> {
    let mut b = LabeledPetriNet::builder();
    let dup = |line: usize, e: crate::error::NetError| ParseError::new(line, e.to_string());
    for p in &doc.places {
        b.add_place(&p.name).map_err(|e| dup(p.line, e))?;
    }
    for t in &doc.transitions {
        b.add_transition(&t.name, &t.label).map_err(|e| dup(t.line, e))?;
    }
    let mut declared: HashMap<&str, usize> = HashMap::new();
    for ev in &doc.events {
        if let Some(prev) = declared.insert(&ev.name, ev.line) {
            return Err(ParseError::new(
                ev.line,
                format!("event {} declared twice (first at line {prev})", ev.name),
            ));
        }
        b.add_event(&ev.name).map_err(|e| dup(ev.line, e))?;
    }
    let mut arcs_seen: HashMap<(&str, &str), usize> = HashMap::new();
    for a in &doc.arcs {
        if let Some(prev) = arcs_seen.insert((&a.from, &a.to), a.line) {
            return Err(ParseError::new(
                a.line,
                format!("arc {} -> {} given twice (first at line {prev})", a.from, a.to),
            ));
        }
        match (b.place(&a.from), b.transition(&a.to), b.transition(&a.from), b.place(&a.to)) {
            (Some(p), Some(t), _, _) => b.set_input(p, t, a.weight),
            (_, _, Some(t), Some(p)) => b.set_output(t, p, a.weight),
            (Some(_), None, _, _) => {
                return Err(ParseError::new(a.line, format!("unknown transition `{}`", a.to)));
            }
            (_, _, Some(_), None) => {
                return Err(ParseError::new(a.line, format!("unknown place `{}`", a.to)));
            }
            _ => {
                return Err(ParseError::new(
                    a.line,
                    format!("unknown place or transition `{}`", a.from),
                ));
            }
        }
    }
    let net = b.build().map_err(|e| ParseError::new(doc.last_line, e.to_string()))?;
    let initial = Marking::from_vec(doc.places.iter().map(|p| p.init.clone()).collect());
    let mut inst = SppInstance::new(net, initial);
    inst.requirement = doc.places.iter().map(|p| p.requirement).collect();
    for ev in &doc.events {
        if let Some((gamma, cost, semantics)) = &ev.protectable {
            inst.protectable.insert(
                ev.name.clone(),
                ProtectableEvent::new(&ev.name, *gamma, cost.clone(), *semantics),
            );
        }
    }
    inst.budget = doc.budget.map(|(_, w)| w);
    Ok(inst)
}

/// Parses an instance document. Every error names the offending line.
pub fn parse_instance(text: &str) -> Result<SppInstance, ParseError> {
    build(parse_document(text)?)
}

/// Parses a net with its initial marking; requirements and events, if
/// present, are ignored.
pub fn parse_net(text: &str) -> Result<(LabeledPetriNet, Marking), ParseError> {
    let inst = parse_instance(text)?;
    Ok((inst.net, inst.initial))
}

pub fn serialize_instance(inst: &SppInstance) -> String {
    serialize_annotated(inst, &[])
}

/// Serializes with leading `#` comment lines.
pub fn serialize_annotated(inst: &SppInstance, notes: &[String]) -> String {
    let net = &inst.net;
    let mut out = String::new();
    for note in notes {
        for line in note.lines() {
            let _ = writeln!(out, "# {line}");
        }
    }
    out.push_str("[places]\n");
    for p in net.places() {
        let _ = write!(out, "{}", net.place_name(p));
        if !inst.initial[p].is_zero() {
            let _ = write!(out, " init={}", inst.initial[p]);
        }
        if inst.requirement_of(p) > 0 {
            let _ = write!(out, " l={}", inst.requirement_of(p));
        }
        out.push('\n');
    }
    out.push_str("\n[transitions]\n");
    for t in net.transitions() {
        let _ = writeln!(out, "{} label={}", net.transition_name(t), net.label_name(t));
    }
    out.push_str("\n[arcs]\n");
    for t in net.transitions() {
        for p in net.places() {
            let w = net.input_weight(p, t);
            if w > 0 {
                let _ = writeln!(out, "{} -> {} : {w}", net.place_name(p), net.transition_name(t));
            }
        }
        for p in net.places() {
            let w = net.output_weight(t, p);
            if w > 0 {
                let _ = writeln!(out, "{} -> {} : {w}", net.transition_name(t), net.place_name(p));
            }
        }
    }
    out.push_str("\n[events]\n");
    for e in net.alphabet() {
        match inst.protectable.get(e) {
            Some(ev) => {
                let _ = writeln!(
                    out,
                    "{e} protectable gamma={} cost={} semantics={}",
                    ev.gamma,
                    format_rational(&ev.cost),
                    ev.semantics
                );
            }
            None => {
                let _ = writeln!(out, "{e} unprotectable");
            }
        }
    }
    if let Some(w) = &inst.budget {
        let _ = write!(out, "\n[budget]\nW = {}\n", format_rational(w));
    }
    out
}

/// `uniform transition <- source transition` lines for a transformed net.
pub fn origin_notes(target: &LabeledPetriNet, source: &LabeledPetriNet, origin: &[crate::net::TransitionId]) -> Vec<String> {
    let mut groups: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for t in target.transitions() {
        groups
            .entry(source.transition_name(origin[t.0]))
            .or_default()
            .push(target.transition_name(t));
    }
    groups
        .into_iter()
        .map(|(src, ts)| format!("origin {src} <- {}", ts.join(" ")))
        .collect()
}
