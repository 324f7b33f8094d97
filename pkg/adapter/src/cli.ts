#!/usr/bin/env node
/** convert --src DIR --durations runs.csv --out DIR [--project NAME] */
import { convertTree } from "./convert";

function parseArgs(argv: string[]): Record<string, string> {
  const args: Record<string, string> = {};
  for (let i = 0; i < argv.length; i += 2) {
    const flag = argv[i];
    const value = argv[i + 1];
    if (!flag.startsWith("--") || value === undefined) {
      throw new Error(`usage: convert --src DIR --durations runs.csv --out DIR [--project NAME]`);
    }
    args[flag.slice(2)] = value;
  }
  for (const required of ["src", "durations", "out"]) {
    if (!(required in args)) throw new Error(`missing required flag --${required}`);
  }
  return args;
}

export function main(argv: string[]): number {
  let args: Record<string, string>;
  try {
    args = parseArgs(argv);
  } catch (error) {
    console.error(String(error instanceof Error ? error.message : error));
    return 2;
  }
  try {
    const outcome = convertTree(
      args.src,
      args.durations,
      args.out,
      args.project ?? "java",
      (message) => console.error(message),
    );
    console.log(`wrote ${outcome.written.length} records, skipped ${outcome.skipped.length}`);
    return outcome.written.length === 0 ? 1 : 0;
  } catch (error) {
    console.error(`error: ${error instanceof Error ? error.message : error}`);
    return 1;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
