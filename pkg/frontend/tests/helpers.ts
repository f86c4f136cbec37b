import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { parseJournal } from "../src/journal.js";
import type { PhaseEvent } from "../src/types.js";

const here = dirname(fileURLToPath(import.meta.url));

export function fixturePath(...parts: string[]): string {
  return join(here, "fixtures", ...parts);
}

export function loadJournal(name: string): PhaseEvent[] {
  return parseJournal(readFileSync(fixturePath(name, "journal.ndjson"), "utf8"));
}

export function loadReport(name: string): Record<string, any> {
  return JSON.parse(readFileSync(fixturePath(name, "report.json"), "utf8"));
}
