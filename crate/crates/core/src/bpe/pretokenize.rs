//! Whitespace-aware pre-tokenization.
//!
//! A pre-token is either a non-whitespace run with at most one directly
//! preceding space attached (" world"), or a whitespace run left over after
//! such attachment. Merges never cross pre-token boundaries, and the
//! pre-tokens of a text concatenate back to it exactly.

/// Splits text into pre-tokens. The concatenation of the result equals the
/// input; splitting two texts at an existing pre-token boundary and
/// concatenating the pre-token lists gives the same result as splitting the
/// concatenation.
pub fn pre_tokenize(text: &str) -> Vec<&str> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let n = chars.len();
    let offset = |k: usize| if k < n { chars[k].0 } else { text.len() };
    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        if chars[i].1.is_whitespace() {
            let mut j = i;
            while j < n && chars[j].1.is_whitespace() {
                j += 1;
            }
            // a single trailing plain space attaches to the following run
            if j < n && chars[j - 1].1 == ' ' {
                if j - 1 > i {
                    out.push(&text[offset(i)..offset(j - 1)]);
                }
                let mut k = j;
                while k < n && !chars[k].1.is_whitespace() {
                    k += 1;
                }
                out.push(&text[offset(j - 1)..offset(k)]);
                i = k;
            } else {
                out.push(&text[offset(i)..offset(j)]);
                i = j;
            }
        } else {
            let mut k = i;
            while k < n && !chars[k].1.is_whitespace() {
                k += 1;
            }
            out.push(&text[offset(i)..offset(k)]);
            i = k;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_splitting() {
        assert_eq!(pre_tokenize(""), Vec::<&str>::new());
        assert_eq!(pre_tokenize("hello"), ["hello"]);
        assert_eq!(pre_tokenize("hello world"), ["hello", " world"]);
        assert_eq!(pre_tokenize(" leading"), [" leading"]);
        assert_eq!(pre_tokenize("trailing "), ["trailing", " "]);
    }

    #[test]
    fn runs_and_newlines() {
        assert_eq!(pre_tokenize("a  b"), ["a", " ", " b"]);
        assert_eq!(pre_tokenize("a\nb"), ["a", "\n", "b"]);
        assert_eq!(pre_tokenize("a\n b"), ["a", "\n", " b"]);
        assert_eq!(pre_tokenize("a \nb"), ["a", " \n", "b"]);
        assert_eq!(pre_tokenize("  a"), [" ", " a"]);
    }

    #[test]
    fn concatenation_restores_input() {
        let cases = [
            "The quick (brown) fox -- jumped!  \n\n Over… the lazy dog. ",
            "tabs\tand\nnewlines \t mixed",
            "ünïcödé tökens日本語 ok",
        ];
        for text in cases {
            assert_eq!(pre_tokenize(text).concat(), text);
        }
    }

    #[test]
    fn boundary_concatenation_is_stable() {
        let a = "some words";
        let b = " more words";
        let mut joined = pre_tokenize(a);
        joined.extend(pre_tokenize(b));
        let whole = format!("{a}{b}");
        assert_eq!(pre_tokenize(&whole), joined);
    }
}
