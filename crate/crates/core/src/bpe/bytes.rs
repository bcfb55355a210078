//! Reversible byte ↔ printable-character mapping.
//!
//! Byte-level tokens may be arbitrary byte sequences, which cannot be put in
//! JSON strings directly. Printable bytes map to themselves; the remaining
//! 68 (controls, space, DEL, 0x80–0xA0, 0xAD) map to consecutive code points
//! starting at U+0100, so every token has a lossless one-character-per-byte
//! text form.

use std::collections::HashMap;
use std::sync::OnceLock;

fn tables() -> &'static ([char; 256], HashMap<char, u8>) {
    static TABLES: OnceLock<([char; 256], HashMap<char, u8>)> = OnceLock::new();
    TABLES.get_or_init(|| {
        let printable =
            |b: u8| (33..=126).contains(&b) || (161..=172).contains(&b) || (174..=255).contains(&b);
        let mut to_char = ['\0'; 256];
        let mut from_char = HashMap::new();
        let mut next = 256u32;
        for b in 0..=255u8 {
            let c = if printable(b) {
                char::from_u32(b as u32).unwrap()
            } else {
                let c = char::from_u32(next).unwrap();
                next += 1;
                c
            };
            to_char[b as usize] = c;
            from_char.insert(c, b);
        }
        (to_char, from_char)
    })
}

/// Text form of a byte sequence, one character per byte.
pub fn display_bytes(bytes: &[u8]) -> String {
    let (to_char, _) = tables();
    bytes.iter().map(|&b| to_char[b as usize]).collect()
}

/// Inverse of [`display_bytes`]. `None` if the string contains a character
/// outside the mapping.
pub fn parse_bytes(s: &str) -> Option<Vec<u8>> {
    let (_, from_char) = tables();
    s.chars().map(|c| from_char.get(&c).copied()).collect()
}
