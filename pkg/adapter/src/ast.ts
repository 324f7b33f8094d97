/**
 * Parse Java source and shape the concrete syntax tree into the interchange
 * AST: rule nodes keep their grammar production names; identifier, literal
 * and operator tokens become valued terminals; keyword and separator tokens
 * (punctuation and delimiters) are dropped.
 */
import { parse } from "java-parser";

export interface AstJson {
  type: string;
  value: string | null;
  children: AstJson[];
}

/** Token categories removed from the tree; recorded in the corpus manifest. */
export const DROPPED_TOKEN_CATEGORIES = ["Keyword", "Separators"] as const;

interface CstNodeLike {
  name: string;
  children: Record<string, (CstNodeLike | TokenLike)[]>;
  location?: { startOffset: number };
}

interface TokenLike {
  image: string;
  startOffset: number;
  tokenType: { name: string; CATEGORIES?: { name: string }[] };
}

function isToken(child: CstNodeLike | TokenLike): child is TokenLike {
  return (child as TokenLike).image !== undefined;
}

function keepToken(token: TokenLike): boolean {
  const categories = (token.tokenType.CATEGORIES ?? []).map((c) => c.name);
  return !categories.some((c) => (DROPPED_TOKEN_CATEGORIES as readonly string[]).includes(c));
}

function startOffset(child: CstNodeLike | TokenLike): number {
  return isToken(child) ? child.startOffset : child.location?.startOffset ?? 0;
}

function convertNode(node: CstNodeLike): AstJson {
  const ordered = Object.values(node.children ?? {})
    .flat()
    .sort((a, b) => startOffset(a) - startOffset(b));
  const children: AstJson[] = [];
  for (const child of ordered) {
    if (isToken(child)) {
      if (keepToken(child)) {
        children.push({ type: child.tokenType.name, value: child.image, children: [] });
      }
    } else {
      children.push(convertNode(child));
    }
  }
  return { type: node.name, value: null, children };
}

/** Parse comment-free Java source into the interchange AST. */
export function sourceToAst(source: string): AstJson {
  const cst = parse(source) as unknown as CstNodeLike;
  return convertNode(cst);
}

export function countNodes(ast: AstJson): number {
  return 1 + ast.children.reduce((total, child) => total + countNodes(child), 0);
}

export function collectLabels(ast: AstJson, into: Set<string> = new Set()): Set<string> {
  into.add(ast.type);
  for (const child of ast.children) collectLabels(child, into);
  return into;
}
