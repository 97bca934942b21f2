import { describe, expect, it } from "vitest";
import { validateRecipe } from "../src/recipeEditor.js";

const VALID = "38 * (93.1, 4.3, 11.7, 0.42, 0.51, 18.9, 0.12, 0.83)";

describe("validateRecipe", () => {
  it("accepts a valid one-line recipe", () => {
    const result = validateRecipe(VALID);
    expect(result.ok).toBe(true);
    expect(result.entries).toHaveLength(1);
    expect(result.totalCount).toBe(38);
    expect(result.entries[0].params[0]).toBeCloseTo(93.1);
  });

  it("accepts comments and blank lines", () => {
    const result = validateRecipe(`# two types\n\n${VALID}\n5 * (50, 2, 4, 0.5, 0.5, 10, 0.1, 0.5) # tail\n`);
    expect(result.ok).toBe(true);
    expect(result.totalCount).toBe(43);
  });

  it("flags count zero as a range issue", () => {
    const result = validateRecipe("0 * (50, 2, 4, 0.5, 0.5, 10, 0.1, 0.5)");
    expect(result.ok).toBe(false);
    expect(result.issues[0].field).toBe("count");
  });

  it("reports error position for syntax errors", () => {
    const result = validateRecipe("5 @ (50, 2, 4, 0.5, 0.5, 10, 0.1, 0.5)");
    expect(result.ok).toBe(false);
    expect(result.issues[0].line).toBe(1);
    expect(result.issues[0].column).toBe(3);
  });

  it("reports the offending line in multi-line input", () => {
    const result = validateRecipe(`${VALID}\nnonsense`);
    expect(result.ok).toBe(false);
    expect(result.issues[0].line).toBe(2);
  });

  it("names out-of-range fields", () => {
    const result = validateRecipe("5 * (500, 2, 4, 0.5, 0.5, 10, 0.1, 0.5)");
    expect(result.issues[0].field).toBe("r_perception");
  });

  it("enforces v_normal <= v_max", () => {
    const result = validateRecipe("5 * (50, 9, 4, 0.5, 0.5, 10, 0.1, 0.5)");
    expect(result.issues[0].field).toBe("v_normal");
  });

  it("rejects empty input", () => {
    const result = validateRecipe("  \n# nothing\n");
    expect(result.ok).toBe(false);
    expect(result.issues[0].message).toMatch(/empty/);
  });

  it("keeps validating after an invalid line", () => {
    const result = validateRecipe(`bad line\n${VALID}`);
    expect(result.ok).toBe(false);
    expect(result.entries).toHaveLength(1);
  });
});
