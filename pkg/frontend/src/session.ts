/**
 * Draft state for one assigned read. Scores and highlights accumulate
 * locally; nothing leaves the browser until submit, and submit stays
 * unavailable until every trait and subtrait has a score.
 */

import type { ReadPayload, SpanPayload, WorkUnit } from "./api.js";
import { scalarLength, scalarSlice } from "./offsets.js";

export interface DraftSpan {
  start: number;
  end: number;
  snapshot: string;
}

function fail(message: string): never {
  throw new Error(`work unit payload: ${message}`);
}

function asObject(value: unknown, where: string): Record<string, unknown> {
  if (value === null || typeof value !== "object" || Array.isArray(value)) fail(`${where} is not an object`);
  return value as Record<string, unknown>;
}

function asString(value: unknown, where: string): string {
  if (typeof value !== "string") fail(`${where} is not a string`);
  return value;
}

function asInt(value: unknown, where: string): number {
  if (typeof value !== "number" || !Number.isInteger(value)) fail(`${where} is not an integer`);
  return value;
}

/**
 * Validate a work unit document before anything renders. A payload that
 * fails here produces no session and no partial view.
 */
export function parseWorkUnit(doc: unknown): WorkUnit {
  const root = asObject(doc, "document");
  const item = asObject(root.item, "item");
  const passagesRaw = root.item === undefined ? undefined : (item.passages ?? []);
  if (!Array.isArray(passagesRaw)) fail("item.passages is not a list");
  const passages = passagesRaw.map((p, i) => asString(p, `item.passages[${i}]`));
  const response = asObject(root.response, "response");
  if (!Array.isArray(root.traits) || root.traits.length === 0) fail("traits is not a non-empty list");
  const traits = root.traits.map((traitDoc, ti) => {
    const trait = asObject(traitDoc, `traits[${ti}]`);
    const scale = asObject(trait.scale, `traits[${ti}].scale`);
    if (!Array.isArray(trait.subtraits) || trait.subtraits.length === 0) {
      fail(`traits[${ti}].subtraits is not a non-empty list`);
    }
    const subtraits = trait.subtraits.map((subDoc, si) => {
      const sub = asObject(subDoc, `traits[${ti}].subtraits[${si}]`);
      const subScale = asObject(sub.scale, `traits[${ti}].subtraits[${si}].scale`);
      const min = asInt(subScale.min, "subtrait scale.min");
      const max = asInt(subScale.max, "subtrait scale.max");
      if (!Array.isArray(sub.rubric)) fail(`subtrait ${String(sub.id)} has no rubric list`);
      const rubric = sub.rubric.map((line, ri) => asString(line, `rubric[${ri}]`));
      if (rubric.length !== max - min + 1) {
        fail(`subtrait ${String(sub.id)} has ${rubric.length} descriptors for scale ${min}..${max}`);
      }
      return {
        id: asString(sub.id, "subtrait id"),
        name: asString(sub.name, "subtrait name"),
        description: asString(sub.description ?? "", "subtrait description"),
        scale: { min, max },
        rubric,
      };
    });
    return {
      id: asString(trait.id, `traits[${ti}].id`),
      name: asString(trait.name, `traits[${ti}].name`),
      scale: { min: asInt(scale.min, "trait scale.min"), max: asInt(scale.max, "trait scale.max") },
      subtraits,
    };
  });
  const seen = new Set<string>();
  for (const trait of traits) {
    for (const sub of trait.subtraits) {
      if (seen.has(sub.id)) fail(`duplicate subtrait id ${sub.id}`);
      seen.add(sub.id);
    }
  }
  return {
    response_id: asString(root.response_id, "response_id"),
    read_index: asInt(root.read_index, "read_index"),
    position: asInt(root.position ?? 0, "position"),
    total: asInt(root.total ?? 0, "total"),
    tree_version: asString(root.tree_version, "tree_version"),
    item: {
      id: asString(item.id, "item.id"),
      title: asString(item.title ?? "", "item.title"),
      stimulus: asString(item.stimulus, "item.stimulus"),
      passages,
    },
    response: {
      id: asString(response.id, "response.id"),
      text: asString(response.text, "response.text"),
    },
    traits,
  };
}

export class MarkingSession {
  readonly unit: WorkUnit;
  private readonly traitScores = new Map<string, number>();
  private readonly subtraitScores = new Map<string, number>();
  private readonly spans = new Map<string, DraftSpan[]>();
  private readonly textScalars: number;

  constructor(unit: WorkUnit) {
    this.unit = unit;
    this.textScalars = scalarLength(unit.response.text);
  }

  private traitById(traitId: string) {
    const trait = this.unit.traits.find((t) => t.id === traitId);
    if (!trait) throw new Error(`unknown trait ${traitId}`);
    return trait;
  }

  private subtraitById(subtraitId: string) {
    for (const trait of this.unit.traits) {
      const sub = trait.subtraits.find((s) => s.id === subtraitId);
      if (sub) return sub;
    }
    throw new Error(`unknown subtrait ${subtraitId}`);
  }

  setTraitScore(traitId: string, score: number): void {
    const { scale } = this.traitById(traitId);
    if (!Number.isInteger(score) || score < scale.min || score > scale.max) {
      throw new Error(`trait ${traitId} score ${score} outside ${scale.min}..${scale.max}`);
    }
    this.traitScores.set(traitId, score);
  }

  setSubtraitScore(subtraitId: string, score: number): void {
    const { scale } = this.subtraitById(subtraitId);
    if (!Number.isInteger(score) || score < scale.min || score > scale.max) {
      throw new Error(`subtrait ${subtraitId} score ${score} outside ${scale.min}..${scale.max}`);
    }
    this.subtraitScores.set(subtraitId, score);
  }

  traitScore(traitId: string): number | undefined {
    return this.traitScores.get(traitId);
  }

  subtraitScore(subtraitId: string): number | undefined {
    return this.subtraitScores.get(subtraitId);
  }

  /**
   * Record a highlight for a subtrait. Offsets are Unicode-scalar positions
   * in the response text. A zero-length selection records nothing; overlaps
   * with existing spans are kept as-is, merging happens downstream.
   */
  addHighlight(subtraitId: string, start: number, end: number): DraftSpan | null {
    this.subtraitById(subtraitId);
    if (start === end) return null;
    if (!Number.isInteger(start) || !Number.isInteger(end) || start < 0 || end > this.textScalars || start > end) {
      throw new Error(`span [${start}, ${end}) outside response of ${this.textScalars} scalars`);
    }
    const span: DraftSpan = {
      start,
      end,
      snapshot: scalarSlice(this.unit.response.text, start, end),
    };
    const existing = this.spans.get(subtraitId) ?? [];
    existing.push(span);
    this.spans.set(subtraitId, existing);
    return span;
  }

  removeHighlight(subtraitId: string, index: number): void {
    const existing = this.spans.get(subtraitId) ?? [];
    if (index < 0 || index >= existing.length) throw new Error(`no highlight ${index} for ${subtraitId}`);
    existing.splice(index, 1);
    if (existing.length === 0) this.spans.delete(subtraitId);
  }

  highlights(subtraitId: string): readonly DraftSpan[] {
    return this.spans.get(subtraitId) ?? [];
  }

  /** Trait and subtrait ids that still have no score. */
  missingScores(): string[] {
    const missing: string[] = [];
    for (const trait of this.unit.traits) {
      if (!this.traitScores.has(trait.id)) missing.push(trait.id);
      for (const sub of trait.subtraits) {
        if (!this.subtraitScores.has(sub.id)) missing.push(sub.id);
      }
    }
    return missing;
  }

  canSubmit(): boolean {
    return this.missingScores().length === 0;
  }

  toReadBody(): ReadPayload {
    const missing = this.missingScores();
    if (missing.length > 0) {
      throw new Error(`cannot submit, unscored: ${missing.join(", ")}`);
    }
    const evidence: Record<string, SpanPayload[]> = {};
    for (const [subtraitId, spans] of this.spans) {
      evidence[subtraitId] = spans.map((s) => ({ ...s }));
    }
    return {
      response_id: this.unit.response_id,
      read_index: this.unit.read_index,
      trait_scores: Object.fromEntries(this.traitScores),
      subtrait_scores: Object.fromEntries(this.subtraitScores),
      evidence,
    };
  }
}
