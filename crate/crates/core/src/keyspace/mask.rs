use std::fmt;

use super::KeyspaceError;

pub const LOWER: &[u8] = b"abcdefghijklmnopqrstuvwxyz";
pub const UPPER: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZ";
pub const DIGITS: &[u8] = b"0123456789";
/// Printable ASCII punctuation, space excluded.
pub const SPECIALS: &[u8] = b"!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~";

/// One position of a mask.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MaskToken {
    Literal(u8),
    /// Characters tried at this position, in enumeration order.
    Class { name: String, chars: Vec<u8> },
    /// Hybrid placeholder for one wordlist entry.
    Word,
}

impl MaskToken {
    fn class(name: &str) -> Result<Self, KeyspaceError> {
        let mut chars = Vec::new();
        for c in name.chars() {
            let set = class_chars(c).ok_or_else(|| KeyspaceError::UnknownClass(name.to_string()))?;
            for &b in set {
                if !chars.contains(&b) {
                    chars.push(b);
                }
            }
        }
        if chars.is_empty() {
            return Err(KeyspaceError::UnknownClass(name.to_string()));
        }
        Ok(MaskToken::Class {
            name: name.to_string(),
            chars,
        })
    }

    /// Number of values this position takes. `Word` is sized by the wordlist.
    pub fn width(&self) -> Option<usize> {
        match self {
            MaskToken::Literal(_) => Some(1),
            MaskToken::Class { chars, .. } => Some(chars.len()),
            MaskToken::Word => None,
        }
    }
}

fn class_chars(c: char) -> Option<&'static [u8]> {
    Some(match c {
        'l' => LOWER,
        'u' => UPPER,
        'd' => DIGITS,
        's' => SPECIALS,
        'a' => ALL,
        _ => return None,
    })
}

const ALL: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789\
!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~";

impl fmt::Display for MaskToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaskToken::Literal(b'?') => f.write_str("??"),
            MaskToken::Literal(b) if b.is_ascii_graphic() || *b == b' ' => {
                write!(f, "{}", *b as char)
            }
            MaskToken::Literal(b) => write!(f, "?x{b:02x}"),
            MaskToken::Class { name, .. } if name.len() == 1 => write!(f, "?{name}"),
            MaskToken::Class { name, .. } => write!(f, "?{{{name}}}"),
            MaskToken::Word => f.write_str("?w"),
        }
    }
}

/// Parses mask text.
///
/// `?l ?u ?d ?s ?a` are the built-in classes, `?{lud}` is the union of the
/// listed classes, `?w` is the hybrid word slot, `??` is a literal `?` and
/// `?xHH` a literal byte given in hex. Every other byte stands for itself.
pub fn parse_mask(text: &str) -> Result<Vec<MaskToken>, KeyspaceError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] != b'?' {
            out.push(MaskToken::Literal(bytes[i]));
            i += 1;
            continue;
        }
        let bad = |at: usize| KeyspaceError::BadMask {
            mask: text.to_string(),
            at,
        };
        match bytes.get(i + 1) {
            Some(b'?') => {
                out.push(MaskToken::Literal(b'?'));
                i += 2;
            }
            Some(b'w') => {
                out.push(MaskToken::Word);
                i += 2;
            }
            Some(b'x') => {
                let hex = text.get(i + 2..i + 4).ok_or_else(|| bad(i))?;
                let b = u8::from_str_radix(hex, 16).map_err(|_| bad(i))?;
                out.push(MaskToken::Literal(b));
                i += 4;
            }
            Some(b'{') => {
                let close = text[i + 2..].find('}').ok_or_else(|| bad(i))? + i + 2;
                out.push(MaskToken::class(&text[i + 2..close])?);
                i = close + 1;
            }
            Some(&c) if class_chars(c as char).is_some() => {
                out.push(MaskToken::class(&(c as char).to_string())?);
                i += 2;
            }
            Some(&c) if c.is_ascii() => {
                return Err(KeyspaceError::UnknownClass((c as char).to_string()))
            }
            _ => return Err(bad(i)),
        }
    }
    Ok(out)
}

pub fn format_mask(tokens: &[MaskToken]) -> String {
    tokens.iter().map(|t| t.to_string()).collect()
}
