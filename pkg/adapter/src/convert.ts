/**
 * File conversion pipeline: Java source -> interchange record JSON.
 *
 * A record id is the source file's path relative to the conversion root;
 * durations come from the sidecar CSV keyed by that id.  Conversion is
 * deterministic: identical input bytes produce identical output bytes.
 */
import { mkdirSync, readFileSync, readdirSync, statSync, writeFileSync } from "node:fs";
import { join, relative, sep } from "node:path";

import { AstJson, DROPPED_TOKEN_CATEGORIES, sourceToAst } from "./ast";
import { DurationsById, parseDurationsCsv } from "./durations";
import { stripComments } from "./strip";
import { tokenize } from "./tokenize";

export interface InterchangeRecord {
  id: string;
  project: string;
  tokens: string[];
  runs_ms: number[];
  ast: AstJson;
}

export interface ConvertOutcome {
  written: string[];
  skipped: { id: string; reason: string }[];
}

export function convertSource(
  source: string,
  id: string,
  project: string,
  runs: number[],
): InterchangeRecord {
  const commentFree = stripComments(source);
  const tokens = tokenize(commentFree);
  if (tokens.length === 0) throw new Error("no tokens after comment removal");
  if (runs.length === 0) throw new Error("no measured durations");
  return { id, project, tokens, runs_ms: runs, ast: sourceToAst(commentFree) };
}

function listJavaFiles(root: string): string[] {
  const stats = statSync(root);
  if (stats.isFile()) return [root];
  const out: string[] = [];
  const walk = (dir: string) => {
    for (const entry of readdirSync(dir, { withFileTypes: true })) {
      const path = join(dir, entry.name);
      if (entry.isDirectory()) walk(path);
      else if (entry.name.endsWith(".java")) out.push(path);
    }
  };
  walk(root);
  return out.sort();
}

function safeFilename(id: string): string {
  return id.split(sep).join("__").replace(/\//g, "__");
}

export function convertTree(
  src: string,
  durationsCsv: string,
  outDir: string,
  project = "java",
  log: (message: string) => void = () => {},
): ConvertOutcome {
  const durations: DurationsById = parseDurationsCsv(durationsCsv);
  const files = listJavaFiles(src);
  if (files.length === 0) throw new Error(`no .java files under ${src}`);
  mkdirSync(outDir, { recursive: true });
  const outcome: ConvertOutcome = { written: [], skipped: [] };
  const root = statSync(src).isFile() ? join(src, "..") : src;
  for (const file of files) {
    const id = relative(root, file).split(sep).join("/");
    try {
      const runs = durations.get(id);
      if (!runs) throw new Error("no durations row for this id");
      const record = convertSource(readFileSync(file, "utf-8"), id, project, runs);
      const target = join(outDir, `${safeFilename(id)}.json`);
      writeFileSync(target, JSON.stringify(record) + "\n", "utf-8");
      outcome.written.push(target);
    } catch (error) {
      const reason = error instanceof Error ? error.message : String(error);
      outcome.skipped.push({ id, reason });
      log(`skipped ${id}: ${reason}`);
    }
  }
  const manifest = {
    adapter: {
      parser: "java-parser (Chevrotain CST, grammar production names)",
      dropped_token_categories: [...DROPPED_TOKEN_CATEGORIES],
      comment_handling: "line and block comments removed before tokenizing and parsing",
    },
    written: outcome.written.length,
    skipped: outcome.skipped,
  };
  writeFileSync(join(outDir, "corpus_meta.json"), JSON.stringify(manifest, null, 2) + "\n", "utf-8");
  return outcome;
}
