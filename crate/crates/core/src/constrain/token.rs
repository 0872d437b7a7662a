use std::fmt;

use thiserror::Error;

use crate::molgraph::{BondOrder, Element};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Key {
    AtomName,
    AtomId,
    Charge,
    Bonds,
    BondType,
    Atom,
}

impl Key {
    pub const ALL: [Key; 6] = [Key::AtomName, Key::AtomId, Key::Charge, Key::Bonds, Key::BondType, Key::Atom];

    pub fn name(self) -> &'static str {
        match self {
            Key::AtomName => "atom_name",
            Key::AtomId => "atom_id",
            Key::Charge => "charge",
            Key::Bonds => "bonds",
            Key::BondType => "bond_type",
            Key::Atom => "atom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Token {
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Colon,
    Quote,
    Key(Key),
    Elem(Element),
    Bond(BondOrder),
    Digit(u8),
    Plus,
    Minus,
    End,
}

/// Size of the closed token alphabet.
pub const VOCAB_SIZE: usize = 7 + 6 + 11 + 3 + 10 + 2 + 1;

impl Token {
    /// Every token, ordered by [`Token::index`].
    pub fn all() -> impl Iterator<Item = Token> {
        (0..VOCAB_SIZE).map(|i| Token::from_index(i).expect("index in range"))
    }

    pub fn index(self) -> usize {
        match self {
            Token::LBrace => 0,
            Token::RBrace => 1,
            Token::LBracket => 2,
            Token::RBracket => 3,
            Token::Comma => 4,
            Token::Colon => 5,
            Token::Quote => 6,
            Token::Key(k) => 7 + k as usize,
            Token::Elem(e) => 13 + e.ordinal(),
            Token::Bond(o) => 24 + usize::from(o.value()) - 1,
            Token::Digit(d) => 27 + usize::from(d),
            Token::Plus => 37,
            Token::Minus => 38,
            Token::End => 39,
        }
    }

    pub fn from_index(i: usize) -> Option<Token> {
        Some(match i {
            0 => Token::LBrace,
            1 => Token::RBrace,
            2 => Token::LBracket,
            3 => Token::RBracket,
            4 => Token::Comma,
            5 => Token::Colon,
            6 => Token::Quote,
            7..=12 => Token::Key(Key::ALL[i - 7]),
            13..=23 => Token::Elem(Element::ALL[i - 13]),
            24..=26 => Token::Bond(BondOrder::ALL[i - 24]),
            27..=36 => Token::Digit((i - 27) as u8),
            37 => Token::Plus,
            38 => Token::Minus,
            39 => Token::End,
            _ => return None,
        })
    }

    /// Text the token contributes to a tree; END contributes nothing.
    pub fn text(self) -> &'static str {
        const DIGITS: [&str; 10] = ["0", "1", "2", "3", "4", "5", "6", "7", "8", "9"];
        match self {
            Token::LBrace => "{",
            Token::RBrace => "}",
            Token::LBracket => "[",
            Token::RBracket => "]",
            Token::Comma => ",",
            Token::Colon => ":",
            Token::Quote => "\"",
            Token::Key(k) => k.name(),
            Token::Elem(e) => e.symbol(),
            Token::Bond(o) => o.name(),
            Token::Digit(d) => DIGITS[usize::from(d)],
            Token::Plus => "+",
            Token::Minus => "-",
            Token::End => "",
        }
    }

    /// Unique printable name (the text, or `<end>`).
    pub fn name(self) -> &'static str {
        match self {
            Token::End => "<end>",
            t => t.text(),
        }
    }

    pub fn from_name(name: &str) -> Option<Token> {
        Token::all().find(|t| t.name() == name)
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Set of tokens as a bitmask over [`Token::index`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct TokenSet(u64);

impl TokenSet {
    pub const EMPTY: TokenSet = TokenSet(0);

    pub fn single(t: Token) -> TokenSet {
        TokenSet(1 << t.index())
    }

    pub fn insert(&mut self, t: Token) {
        self.0 |= 1 << t.index();
    }

    pub fn contains(self, t: Token) -> bool {
        self.0 & (1 << t.index()) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Token> {
        Token::all().filter(move |&t| self.contains(t))
    }
}

impl FromIterator<Token> for TokenSet {
    fn from_iter<I: IntoIterator<Item = Token>>(iter: I) -> Self {
        let mut set = TokenSet::EMPTY;
        for t in iter {
            set.insert(t);
        }
        set
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LexError {
    #[error("empty input")]
    Empty,
    #[error("unexpected character {ch:?} at byte {position}")]
    UnexpectedChar { ch: char, position: usize },
    #[error("unknown word {word:?} at byte {position}")]
    UnknownWord { word: String, position: usize },
    #[error("unterminated string starting at byte {position}")]
    Unterminated { position: usize },
}

/// Splits compact tree JSON into tokens.
pub fn tokenize(text: &str) -> Result<Vec<Token>, LexError> {
    lex(text, false)
}

/// Like [`tokenize`], but a trailing opening quote or a trailing partial
/// word is allowed, as in a generation prompt cut mid-field. A partial word
/// is dropped; only whole tokens are returned.
pub fn tokenize_prefix(text: &str) -> Result<Vec<Token>, LexError> {
    lex(text, true)
}

fn lex(text: &str, prefix: bool) -> Result<Vec<Token>, LexError> {
    if text.is_empty() && !prefix {
        return Err(LexError::Empty);
    }
    let mut out = Vec::new();
    let mut rest = text.char_indices().peekable();
    while let Some((pos, ch)) = rest.next() {
        let tok = match ch {
            '{' => Token::LBrace,
            '}' => Token::RBrace,
            '[' => Token::LBracket,
            ']' => Token::RBracket,
            ',' => Token::Comma,
            ':' => Token::Colon,
            '+' => Token::Plus,
            '-' => Token::Minus,
            '0'..='9' => Token::Digit(ch as u8 - b'0'),
            '"' => {
                out.push(Token::Quote);
                let start = pos + 1;
                let Some(len) = text[start..].find('"') else {
                    if prefix {
                        return Ok(out);
                    }
                    return Err(LexError::Unterminated { position: pos });
                };
                let word = &text[start..start + len];
                out.push(
                    word_token(word)
                        .ok_or_else(|| LexError::UnknownWord { word: word.to_string(), position: start })?,
                );
                while rest.peek().is_some_and(|&(p, _)| p < start + len + 1) {
                    rest.next();
                }
                Token::Quote
            }
            _ => return Err(LexError::UnexpectedChar { ch, position: pos }),
        };
        out.push(tok);
    }
    Ok(out)
}

fn word_token(word: &str) -> Option<Token> {
    Key::ALL
        .iter()
        .find(|k| k.name() == word)
        .map(|&k| Token::Key(k))
        .or_else(|| Element::from_symbol(word).map(Token::Elem))
        .or_else(|| BondOrder::from_name(word).map(Token::Bond))
}

/// Concatenates token texts. `tokenize(&detokenize(ts)) == ts` for any
/// sequence without END.
pub fn detokenize(tokens: &[Token]) -> String {
    tokens.iter().map(|t| t.text()).collect()
}
