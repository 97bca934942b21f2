/**
 * Client-side recipe validation for live editor feedback.
 *
 * Mirrors the server grammar exactly: one entry per line,
 *   <count> * (<r_perception>, <v_normal>, <v_max>, <w_cohesion>,
 *              <w_alignment>, <w_separation>, <p_random_steer>, <w_pacekeeping>)
 * with '#' comments and blank lines ignored, counts >= 1, parameters inside
 * their legal ranges, and v_normal <= v_max. Any recipe serialized by the
 * server parses clean here.
 */

export const PARAM_FIELDS = [
  "r_perception",
  "v_normal",
  "v_max",
  "w_cohesion",
  "w_alignment",
  "w_separation",
  "p_random_steer",
  "w_pacekeeping",
] as const;

export const PARAM_RANGES: Record<(typeof PARAM_FIELDS)[number], [number, number]> = {
  r_perception: [0, 300],
  v_normal: [0, 20],
  v_max: [0, 40],
  w_cohesion: [0, 1],
  w_alignment: [0, 1],
  w_separation: [0, 100],
  p_random_steer: [0, 0.5],
  w_pacekeeping: [0, 1],
};

export interface RecipeEntry {
  count: number;
  params: number[];
}

export interface RecipeIssue {
  line: number;
  column: number;
  message: string;
  field?: string;
}

export interface ValidationResult {
  ok: boolean;
  entries: RecipeEntry[];
  issues: RecipeIssue[];
  totalCount: number;
}

const NUMBER_RE = /^[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?/;
const INT_RE = /^\d+/;

class LineScanner {
  pos = 0;

  constructor(
    readonly text: string,
    readonly line: number,
  ) {}

  skipWs(): void {
    while (this.pos < this.text.length && (this.text[this.pos] === " " || this.text[this.pos] === "\t")) {
      this.pos++;
    }
  }

  issue(message: string, field?: string): RecipeIssue {
    return { line: this.line, column: this.pos + 1, message, field };
  }

  expect(char: string): RecipeIssue | null {
    this.skipWs();
    if (this.text[this.pos] !== char) return this.issue(`expected '${char}'`);
    this.pos++;
    return null;
  }

  readInt(what: string): number | RecipeIssue {
    this.skipWs();
    const m = INT_RE.exec(this.text.slice(this.pos));
    if (!m) return this.issue(`expected ${what}`);
    this.pos += m[0].length;
    return parseInt(m[0], 10);
  }

  readNumber(what: string): number | RecipeIssue {
    this.skipWs();
    const m = NUMBER_RE.exec(this.text.slice(this.pos));
    if (!m) return this.issue(`expected ${what}`);
    this.pos += m[0].length;
    return parseFloat(m[0]);
  }

  atEnd(): boolean {
    this.skipWs();
    return this.pos >= this.text.length;
  }
}

export function validateRecipe(text: string): ValidationResult {
  const entries: RecipeEntry[] = [];
  const issues: RecipeIssue[] = [];

  const lines = text.split("\n");
  for (let k = 0; k < lines.length; k++) {
    const lineNo = k + 1;
    const stripped = lines[k].split("#", 1)[0];
    if (!stripped.trim()) continue;
    const sc = new LineScanner(stripped, lineNo);

    const count = sc.readInt("particle count");
    if (typeof count !== "number") {
      issues.push(count);
      continue;
    }
    let failed = false;
    for (const char of ["*", "("]) {
      const err = sc.expect(char);
      if (err) {
        issues.push(err);
        failed = true;
        break;
      }
    }
    if (failed) continue;

    const values: number[] = [];
    for (let p = 0; p < PARAM_FIELDS.length; p++) {
      if (p > 0) {
        const err = sc.expect(",");
        if (err) {
          issues.push(err);
          failed = true;
          break;
        }
      }
      const value = sc.readNumber(`value for ${PARAM_FIELDS[p]}`);
      if (typeof value !== "number") {
        issues.push(value);
        failed = true;
        break;
      }
      values.push(value);
    }
    if (failed) continue;
    const closing = sc.expect(")");
    if (closing) {
      issues.push(closing);
      continue;
    }
    if (!sc.atEnd()) {
      issues.push(sc.issue("unexpected trailing characters"));
      continue;
    }

    if (count < 1) {
      issues.push({ line: lineNo, column: 1, message: "count must be >= 1", field: "count" });
      continue;
    }
    let rangeOk = true;
    for (let p = 0; p < PARAM_FIELDS.length; p++) {
      const field = PARAM_FIELDS[p];
      const [lo, hi] = PARAM_RANGES[field];
      if (values[p] < lo || values[p] > hi) {
        issues.push({
          line: lineNo,
          column: 1,
          message: `${field} = ${values[p]} outside legal range [${lo}, ${hi}]`,
          field,
        });
        rangeOk = false;
      }
    }
    if (rangeOk && values[1] > values[2]) {
      issues.push({
        line: lineNo,
        column: 1,
        message: `v_normal = ${values[1]} exceeds v_max = ${values[2]}`,
        field: "v_normal",
      });
      rangeOk = false;
    }
    if (rangeOk) entries.push({ count, params: values });
  }

  if (entries.length === 0 && issues.length === 0) {
    issues.push({ line: 1, column: 1, message: "empty recipe" });
  }
  return {
    ok: issues.length === 0,
    entries,
    issues,
    totalCount: entries.reduce((total, e) => total + e.count, 0),
  };
}
