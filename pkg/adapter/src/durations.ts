/** Sidecar durations CSV: header `id,run_ms`, one row per measured run. */
import { readFileSync } from "node:fs";

export type DurationsById = Map<string, number[]>;

export function parseDurationsCsv(path: string): DurationsById {
  const text = readFileSync(path, "utf-8");
  const lines = text.split(/\r?\n/).filter((line) => line.trim().length > 0);
  if (lines.length === 0) throw new Error(`durations csv is empty: ${path}`);
  const header = lines[0].split(",").map((c) => c.trim());
  if (header[0] !== "id" || header[1] !== "run_ms") {
    throw new Error(`durations csv must start with header "id,run_ms", got "${lines[0]}"`);
  }
  const byId: DurationsById = new Map();
  for (const [index, line] of lines.slice(1).entries()) {
    const comma = line.lastIndexOf(",");
    if (comma < 0) throw new Error(`durations csv row ${index + 2}: missing comma`);
    const id = line.slice(0, comma).trim();
    const value = Number(line.slice(comma + 1));
    if (!id || !Number.isFinite(value) || value <= 0) {
      throw new Error(`durations csv row ${index + 2}: need an id and a positive run_ms`);
    }
    const runs = byId.get(id) ?? [];
    runs.push(value);
    byId.set(id, runs);
  }
  return byId;
}
