import { describe, expect, it } from "vitest";

import { tokenize } from "../src/tokenize";

describe("tokenize", () => {
  it("splits a simple statement", () => {
    expect(tokenize("int x = 42;")).toEqual(["int", "x", "=", "42", ";"]);
  });

  it("keeps string literals whole", () => {
    expect(tokenize('assertEquals("a b", f);')).toEqual([
      "assertEquals", "(", '"a b"', ",", "f", ")", ";",
    ]);
  });

  it("handles escapes inside literals", () => {
    expect(tokenize('String s = "a\\"b";')).toEqual(["String", "s", "=", '"a\\"b"', ";"]);
  });

  it("scans float suffixes and comparison operators", () => {
    expect(tokenize("if(t <= 3.0d)")).toEqual(["if", "(", "t", "<=", "3.0d", ")"]);
  });

  it("prefers the longest operator", () => {
    expect(tokenize("a >>>= b")).toEqual(["a", ">>>=", "b"]);
    expect(tokenize("a >= b")).toEqual(["a", ">=", "b"]);
  });

  it("rejects stray characters", () => {
    expect(() => tokenize("int § = 1;")).toThrow(/unexpected character/);
  });
});
