/**
 * Comment removal that respects string and character literals.
 *
 * Line comments are replaced by nothing, block comments by a single space
 * (so `a/*x*​/b` stays two tokens); newlines inside block comments are kept
 * so line numbers survive for diagnostics.
 */
export function stripComments(source: string): string {
  let out = "";
  let i = 0;
  const n = source.length;
  while (i < n) {
    const ch = source[i];
    const next = source[i + 1];
    if (ch === "/" && next === "/") {
      while (i < n && source[i] !== "\n") i++;
    } else if (ch === "/" && next === "*") {
      let replacement = " ";
      i += 2;
      while (i < n && !(source[i] === "*" && source[i + 1] === "/")) {
        if (source[i] === "\n") replacement += "\n";
        i++;
      }
      if (i >= n) throw new Error("unclosed block comment");
      i += 2;
      out += replacement;
    } else if (ch === '"' || ch === "'") {
      const quote = ch;
      out += ch;
      i++;
      while (i < n) {
        out += source[i];
        if (source[i] === "\\") {
          out += source[i + 1] ?? "";
          i += 2;
          continue;
        }
        if (source[i] === quote) {
          i++;
          break;
        }
        i++;
      }
    } else {
      out += ch;
      i++;
    }
  }
  return out;
}
