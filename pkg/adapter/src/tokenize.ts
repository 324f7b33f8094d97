/** Java lexical tokens from comment-free source. */

// multi-character operators first so the scanner takes the longest match
const OPERATORS = [
  ">>>=", "<<=", ">>=", ">>>",
  "...", "::", "->",
  "==", "!=", "<=", ">=", "&&", "||", "++", "--",
  "+=", "-=", "*=", "/=", "&=", "|=", "^=", "%=", "<<", ">>",
  "+", "-", "*", "/", "%", "=", "<", ">", "!", "~", "&", "|", "^", "?", ":",
];

const SEPARATORS = new Set(["(", ")", "{", "}", "[", "]", ";", ",", ".", "@"]);

const IDENT_START = /[A-Za-z_$]/;
const IDENT_PART = /[A-Za-z0-9_$]/;
const DIGIT = /[0-9]/;

/**
 * Split comment-free Java source into lexical tokens: identifiers and
 * keywords, numeric/string/char literals, operators and separators.
 */
export function tokenize(source: string): string[] {
  const tokens: string[] = [];
  let i = 0;
  const n = source.length;
  while (i < n) {
    const ch = source[i];
    if (/\s/.test(ch)) {
      i++;
      continue;
    }
    if (ch === '"' || ch === "'") {
      const quote = ch;
      let j = i + 1;
      while (j < n && source[j] !== quote) {
        if (source[j] === "\\") j++;
        j++;
      }
      if (j >= n) throw new Error(`unterminated ${quote === '"' ? "string" : "char"} literal at offset ${i}`);
      tokens.push(source.slice(i, j + 1));
      i = j + 1;
      continue;
    }
    if (IDENT_START.test(ch)) {
      let j = i + 1;
      while (j < n && IDENT_PART.test(source[j])) j++;
      tokens.push(source.slice(i, j));
      i = j;
      continue;
    }
    if (DIGIT.test(ch) || (ch === "." && i + 1 < n && DIGIT.test(source[i + 1]))) {
      let j = i;
      // hex/binary prefixes, digits, underscores, radix point, exponent, suffix
      while (
        j < n &&
        (/[0-9a-fA-FxXbB_.]/.test(source[j]) ||
          ((source[j] === "+" || source[j] === "-") && /[eEpP]/.test(source[j - 1])))
      ) {
        j++;
      }
      while (j < n && /[lLfFdD]/.test(source[j])) j++;
      tokens.push(source.slice(i, j));
      i = j;
      continue;
    }
    if (SEPARATORS.has(ch)) {
      tokens.push(ch);
      i++;
      continue;
    }
    const op = OPERATORS.find((candidate) => source.startsWith(candidate, i));
    if (op) {
      tokens.push(op);
      i += op.length;
      continue;
    }
    throw new Error(`unexpected character ${JSON.stringify(ch)} at offset ${i}`);
  }
  return tokens;
}
