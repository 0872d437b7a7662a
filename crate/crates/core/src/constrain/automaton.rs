use std::collections::VecDeque;

use thiserror::Error;

use super::token::{Key, Token, TokenSet};
use crate::molgraph::{BondOrder, Element, ValenceTable};

pub const DEFAULT_ATOM_BUDGET: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ConstraintMode {
    /// Grammar, alphabets, valence feasibility and closure legality.
    #[default]
    Full,
    /// Grammar and alphabets only: no valence bookkeeping, and a ring
    /// closure may target any earlier atom with the chosen element.
    SchemaOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("token {token} is not allowed here")]
pub struct IllegalToken {
    pub token: Token,
}

/// Static configuration shared by every decode.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraints {
    pub table: ValenceTable,
    pub atom_budget: usize,
    pub mode: ConstraintMode,
}

impl Default for Constraints {
    fn default() -> Self {
        Constraints { table: ValenceTable::default(), atom_budget: DEFAULT_ATOM_BUDGET, mode: ConstraintMode::Full }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct DefinedAtom {
    element: Element,
    charge: i8,
    used: u32,
    neighbors: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Pos {
    Element,
    Id(String),
    NodeKey,
    ChargeStart,
    ChargeNeg,
    BondsOpen,
    AfterBond,
    BondType,
    Complete,
    Finished,
}

/// Decoder position after a token prefix. Plain value: `advance` on a
/// clone leaves the original untouched.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecoderState {
    /// Literal tokens forced before the next decision point.
    pending: VecDeque<Token>,
    pos: Pos,
    atoms: Vec<DefinedAtom>,
    /// Atoms whose node is open, innermost last.
    open: Vec<usize>,
    /// Element and bond order of the node being named, if it hangs off a bond.
    element: Option<Element>,
    order: Option<BondOrder>,
}

const NODE_HEAD: [Token; 6] =
    [Token::LBrace, Token::Quote, Token::Key(Key::AtomName), Token::Quote, Token::Colon, Token::Quote];
const AFTER_ELEMENT: [Token; 6] =
    [Token::Quote, Token::Comma, Token::Quote, Token::Key(Key::AtomId), Token::Quote, Token::Colon];
const BOND_HEAD: [Token; 5] = [Token::Quote, Token::Key(Key::BondType), Token::Quote, Token::Colon, Token::Quote];
const AFTER_BOND_TYPE: [Token; 6] =
    [Token::Quote, Token::Comma, Token::Quote, Token::Key(Key::Atom), Token::Quote, Token::Colon];
const OPEN_BONDS: [Token; 4] = [Token::Quote, Token::Key(Key::Bonds), Token::Quote, Token::Colon];

/// Nonzero formal charges a definition may declare.
const CHARGES: [i8; 4] = [-2, -1, 1, 2];

impl DecoderState {
    pub fn is_complete(&self) -> bool {
        matches!(self.pos, Pos::Complete | Pos::Finished) && self.pending.is_empty()
    }

    /// True once END has been accepted.
    pub fn is_finished(&self) -> bool {
        self.pos == Pos::Finished
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn next_id(&self) -> usize {
        self.atoms.len()
    }

    fn current(&self) -> usize {
        *self.open.last().expect("an atom is open")
    }
}

impl Constraints {
    pub fn new(table: ValenceTable, atom_budget: usize, mode: ConstraintMode) -> Self {
        Constraints { table, atom_budget, mode }
    }

    pub fn initial(&self) -> DecoderState {
        DecoderState {
            pending: NODE_HEAD.into_iter().collect(),
            pos: Pos::Element,
            atoms: Vec::new(),
            open: Vec::new(),
            element: None,
            order: None,
        }
    }

    fn full(&self) -> bool {
        self.mode == ConstraintMode::Full
    }

    fn budget_left(&self, s: &DecoderState) -> bool {
        s.atoms.len() < self.atom_budget
    }

    fn capacity(&self, e: Element, q: i8) -> u32 {
        self.table.max_valence(e, q)
    }

    fn remaining(&self, a: &DefinedAtom) -> u32 {
        if self.full() {
            self.capacity(a.element, a.charge).saturating_sub(a.used)
        } else {
            u32::MAX
        }
    }

    fn charge_ok(&self, e: Element, q: i8, need: u32) -> bool {
        !self.full() || self.capacity(e, q) >= need
    }

    /// A fresh atom of element `e` could take a bond of order `need`.
    fn definable(&self, s: &DecoderState, e: Element, need: u32) -> bool {
        self.budget_left(s) && (self.charge_ok(e, 0, need) || CHARGES.iter().any(|&q| self.charge_ok(e, q, need)))
    }

    /// Atoms a bond of order `need` from the current atom may close onto.
    fn closure_targets<'a>(
        &'a self,
        s: &'a DecoderState,
        element: Option<Element>,
        need: u32,
    ) -> impl Iterator<Item = usize> + 'a {
        let parent = s.open.last().copied();
        s.atoms.iter().enumerate().filter_map(move |(id, a)| {
            if element.is_some_and(|e| e != a.element) {
                return None;
            }
            if self.full() {
                let p = parent?;
                if id == p || a.neighbors.contains(&p) || self.remaining(a) < need {
                    return None;
                }
            }
            Some(id)
        })
    }

    fn id_candidates(&self, s: &DecoderState) -> Vec<usize> {
        let e = s.element.expect("element chosen before id");
        let need = s.order.map_or(0, |o| u32::from(o.value()));
        let mut ids = Vec::new();
        if self.definable(s, e, need) {
            ids.push(s.next_id());
        }
        if s.order.is_some() {
            ids.extend(self.closure_targets(s, Some(e), need));
        }
        ids
    }

    /// Exactly the tokens that keep the prefix completable.
    pub fn allowed_next(&self, s: &DecoderState) -> TokenSet {
        if let Some(&t) = s.pending.front() {
            return TokenSet::single(t);
        }
        let mut set = TokenSet::EMPTY;
        match &s.pos {
            Pos::Element => {
                let need = s.order.map_or(0, |o| u32::from(o.value()));
                for e in Element::HEAVY {
                    let closable = s.order.is_some() && self.closure_targets(s, Some(e), need).next().is_some();
                    if closable || self.definable(s, e, need) {
                        set.insert(Token::Elem(e));
                    }
                }
            }
            Pos::Id(typed) => {
                for id in self.id_candidates(s) {
                    let text = id.to_string();
                    if let Some(rest) = text.strip_prefix(typed.as_str()) {
                        match rest.bytes().next() {
                            Some(d) => set.insert(Token::Digit(d - b'0')),
                            None => set.insert(Token::Comma),
                        }
                    }
                }
            }
            Pos::NodeKey => {
                let a = &s.atoms[s.current()];
                if self.charge_ok(a.element, 0, a.used) {
                    set.insert(Token::Key(Key::Bonds));
                }
                if CHARGES.iter().any(|&q| self.charge_ok(a.element, q, a.used)) {
                    set.insert(Token::Key(Key::Charge));
                }
            }
            Pos::ChargeStart | Pos::ChargeNeg => {
                let a = &s.atoms[s.current()];
                let negative = s.pos == Pos::ChargeNeg;
                for &q in &CHARGES {
                    if self.charge_ok(a.element, q, a.used) {
                        if negative && q < 0 {
                            set.insert(Token::Digit(q.unsigned_abs()));
                        } else if !negative && q < 0 {
                            set.insert(Token::Minus);
                        } else if !negative {
                            set.insert(Token::Digit(q as u8));
                        }
                    }
                }
            }
            Pos::BondsOpen | Pos::AfterBond => {
                if self.bond_order_allowed(s, BondOrder::Single) {
                    set.insert(if s.pos == Pos::BondsOpen { Token::LBrace } else { Token::Comma });
                }
                set.insert(Token::RBracket);
            }
            Pos::BondType => {
                for o in BondOrder::ALL {
                    if self.bond_order_allowed(s, o) {
                        set.insert(Token::Bond(o));
                    }
                }
            }
            Pos::Complete => set.insert(Token::End),
            Pos::Finished => {}
        }
        set
    }

    fn bond_order_allowed(&self, s: &DecoderState, o: BondOrder) -> bool {
        let need = u32::from(o.value());
        let parent = &s.atoms[s.current()];
        if self.remaining(parent) < need {
            return false;
        }
        Element::HEAVY.iter().any(|&e| self.definable(s, e, need))
            || self.closure_targets(s, None, need).next().is_some()
    }

    /// Accepts `t`, or reports it as illegal and leaves `s` unchanged.
    pub fn advance_mut(&self, s: &mut DecoderState, t: Token) -> Result<(), IllegalToken> {
        if !self.allowed_next(s).contains(t) {
            return Err(IllegalToken { token: t });
        }
        if s.pending.pop_front().is_some() {
            return Ok(());
        }
        let pos = std::mem::replace(&mut s.pos, Pos::Finished);
        s.pos = match (pos, t) {
            (Pos::Element, Token::Elem(e)) => {
                s.element = Some(e);
                s.pending.extend(AFTER_ELEMENT);
                Pos::Id(String::new())
            }
            (Pos::Id(mut typed), Token::Digit(d)) => {
                typed.push(char::from(b'0' + d));
                Pos::Id(typed)
            }
            (Pos::Id(typed), Token::Comma) => self.resolve_id(s, typed.parse().expect("digits")),
            (Pos::NodeKey, Token::Key(Key::Bonds)) => {
                s.pending.extend([Token::Quote, Token::Colon, Token::LBracket]);
                Pos::BondsOpen
            }
            (Pos::NodeKey, Token::Key(Key::Charge)) => {
                s.pending.extend([Token::Quote, Token::Colon]);
                Pos::ChargeStart
            }
            (Pos::ChargeStart, Token::Minus) => Pos::ChargeNeg,
            (pos @ (Pos::ChargeStart | Pos::ChargeNeg), Token::Digit(d)) => {
                let q = d as i8;
                let current = s.current();
                s.atoms[current].charge = if pos == Pos::ChargeNeg { -q } else { q };
                s.pending.push_back(Token::Comma);
                s.pending.extend(OPEN_BONDS);
                s.pending.push_back(Token::LBracket);
                Pos::BondsOpen
            }
            (Pos::BondsOpen, Token::LBrace) => {
                s.pending.extend(BOND_HEAD);
                Pos::BondType
            }
            (Pos::AfterBond, Token::Comma) => {
                s.pending.push_back(Token::LBrace);
                s.pending.extend(BOND_HEAD);
                Pos::BondType
            }
            (Pos::BondsOpen | Pos::AfterBond, Token::RBracket) => {
                s.open.pop();
                s.pending.push_back(Token::RBrace);
                if s.open.is_empty() {
                    Pos::Complete
                } else {
                    s.pending.push_back(Token::RBrace);
                    Pos::AfterBond
                }
            }
            (Pos::BondType, Token::Bond(o)) => {
                let current = s.current();
                s.atoms[current].used += u32::from(o.value());
                s.order = Some(o);
                s.pending.extend(AFTER_BOND_TYPE);
                s.pending.extend(NODE_HEAD);
                Pos::Element
            }
            (Pos::Complete, Token::End) => Pos::Finished,
            (pos, t) => unreachable!("allowed token {t} has no transition from {pos:?}"),
        };
        Ok(())
    }

    fn resolve_id(&self, s: &mut DecoderState, id: usize) -> Pos {
        let element = s.element.take().expect("element chosen before id");
        let order = s.order.take();
        let need = order.map_or(0, |o| u32::from(o.value()));
        let parent = s.open.last().copied();
        if id == s.atoms.len() {
            s.atoms.push(DefinedAtom { element, charge: 0, used: need, neighbors: Vec::new() });
            if let Some(p) = parent {
                s.atoms[p].neighbors.push(id);
                s.atoms[id].neighbors.push(p);
            }
            s.open.push(id);
            s.pending.push_back(Token::Quote);
            Pos::NodeKey
        } else {
            let p = parent.expect("back-references only occur inside bonds");
            s.atoms[id].used += need;
            s.atoms[id].neighbors.push(p);
            s.atoms[p].neighbors.push(id);
            s.pending.extend(OPEN_BONDS);
            s.pending.extend([Token::LBracket, Token::RBracket, Token::RBrace, Token::RBrace]);
            Pos::AfterBond
        }
    }

    pub fn advance(&self, s: &DecoderState, t: Token) -> Result<DecoderState, IllegalToken> {
        let mut next = s.clone();
        self.advance_mut(&mut next, t)?;
        Ok(next)
    }

    /// Replays `tokens` from the initial state.
    pub fn replay(&self, tokens: &[Token]) -> Result<DecoderState, ReplayError> {
        let mut s = self.initial();
        for (position, &t) in tokens.iter().enumerate() {
            self.advance_mut(&mut s, t).map_err(|e| ReplayError { position, token: e.token })?;
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("token {token} at position {position} is not allowed")]
pub struct ReplayError {
    pub position: usize,
    pub token: Token,
}
