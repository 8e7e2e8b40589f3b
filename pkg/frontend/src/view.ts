/**
 * DOM rendering for one work unit: context pane beside the response,
 * score selectors per trait and subtrait, highlight layers, submit gate.
 * No framework; the document is rebuilt from session state on change.
 */

import type { ReadPayload, SubtraitDoc, WorkUnit } from "./api.js";
import { utf16ToScalar, scalarToUtf16 } from "./offsets.js";
import { MarkingSession, parseWorkUnit } from "./session.js";

export interface ViewOptions {
  onSubmit: (body: ReadPayload) => void;
}

export interface ViewHandles {
  session: MarkingSession;
  responsePane: HTMLElement;
  submitButton: HTMLButtonElement;
  /** Subtrait currently receiving highlights, null before any choice. */
  activeSubtrait(): string | null;
  setActiveSubtrait(subtraitId: string): void;
  /** Capture the current window selection into the active subtrait. */
  captureSelection(): boolean;
  /** Repaint highlight layers, span lists and the submit gate. */
  refresh(): void;
}

interface Paragraph {
  u16Start: number;
  text: string;
}

/** Split on newlines, keeping each paragraph's UTF-16 start offset. */
export function splitParagraphs(text: string): Paragraph[] {
  const out: Paragraph[] = [];
  let cursor = 0;
  for (const part of text.split("\n")) {
    if (part.length > 0) out.push({ u16Start: cursor, text: part });
    cursor += part.length + 1;
  }
  if (out.length === 0) out.push({ u16Start: 0, text: "" });
  return out;
}

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

/**
 * UTF-16 offset of a selection boundary inside the response pane, or null
 * when the boundary sits outside any paragraph of the pane.
 */
function paneOffset(pane: HTMLElement, node: Node, offsetInNode: number): number | null {
  let container: Node | null = node;
  while (container && container !== pane) {
    if (container instanceof HTMLElement && container.dataset.u16Start !== undefined) break;
    container = container.parentNode;
  }
  if (!(container instanceof HTMLElement) || container.dataset.u16Start === undefined) return null;
  const paragraph = container;
  if (!pane.contains(paragraph)) return null;
  const doc = pane.ownerDocument;
  let consumed = 0;
  if (node.nodeType === Node.TEXT_NODE) {
    const walker = doc.createTreeWalker(paragraph, NodeFilter.SHOW_TEXT);
    let current = walker.nextNode();
    while (current && current !== node) {
      consumed += (current.textContent ?? "").length;
      current = walker.nextNode();
    }
    if (current !== node) return null;
    consumed += offsetInNode;
  } else {
    // Element boundary: sum the text of children before the offset.
    for (let i = 0; i < offsetInNode && i < node.childNodes.length; i += 1) {
      consumed += (node.childNodes[i].textContent ?? "").length;
    }
    if (node !== paragraph) {
      const walker = doc.createTreeWalker(paragraph, NodeFilter.SHOW_TEXT);
      let current = walker.nextNode();
      while (current && !node.contains(current)) {
        consumed += (current.textContent ?? "").length;
        current = walker.nextNode();
      }
    }
  }
  return Number(paragraph.dataset.u16Start) + consumed;
}

/**
 * Read the window selection as scalar offsets into the response text.
 * Returns null for no selection, a collapsed one, or one that touches
 * anything outside the response pane.
 */
export function captureHighlight(
  pane: HTMLElement,
  text: string,
  selection: Selection | null,
): { start: number; end: number } | null {
  if (!selection || selection.rangeCount === 0) return null;
  const range = selection.getRangeAt(0);
  if (range.collapsed) return null;
  if (!pane.contains(range.startContainer) || !pane.contains(range.endContainer)) return null;
  const a = paneOffset(pane, range.startContainer, range.startOffset);
  const b = paneOffset(pane, range.endContainer, range.endOffset);
  if (a === null || b === null) return null;
  const startU16 = Math.min(a, b);
  const endU16 = Math.max(a, b);
  const start = utf16ToScalar(text, startU16);
  const end = utf16ToScalar(text, endU16);
  if (start === end) return null;
  return { start, end };
}

const HL_CLASSES = 8;

function subtraitOrder(unit: WorkUnit): string[] {
  const ids: string[] = [];
  for (const trait of unit.traits) {
    for (const sub of trait.subtraits) ids.push(sub.id);
  }
  return ids;
}

/** Rebuild one paragraph with <mark> layers for every covering span. */
function paintParagraph(
  doc: Document,
  paragraph: Paragraph,
  spans: { startU16: number; endU16: number; colorIndex: number }[],
): HTMLElement {
  const p = el(doc, "p", "response-paragraph");
  p.dataset.u16Start = String(paragraph.u16Start);
  const paraEnd = paragraph.u16Start + paragraph.text.length;
  const cuts = new Set<number>([paragraph.u16Start, paraEnd]);
  for (const span of spans) {
    if (span.endU16 <= paragraph.u16Start || span.startU16 >= paraEnd) continue;
    cuts.add(Math.max(span.startU16, paragraph.u16Start));
    cuts.add(Math.min(span.endU16, paraEnd));
  }
  const edges = [...cuts].sort((x, y) => x - y);
  for (let i = 0; i + 1 < edges.length; i += 1) {
    const from = edges[i];
    const to = edges[i + 1];
    const piece = paragraph.text.slice(from - paragraph.u16Start, to - paragraph.u16Start);
    const covering = spans.filter((s) => s.startU16 <= from && s.endU16 >= to);
    if (covering.length === 0) {
      p.appendChild(doc.createTextNode(piece));
    } else {
      const classes = ["hl", `hl-${covering[0].colorIndex % HL_CLASSES}`];
      if (covering.length > 1) classes.push("hl-multi");
      p.appendChild(el(doc, "mark", classes.join(" "), piece));
    }
  }
  if (p.childNodes.length === 0) p.appendChild(doc.createTextNode(""));
  return p;
}

function renderErrorState(root: HTMLElement, message: string): void {
  const doc = root.ownerDocument;
  const box = el(doc, "div", "error-state");
  box.appendChild(el(doc, "h2", undefined, "Cannot display this work unit"));
  box.appendChild(el(doc, "p", "error-detail", message));
  root.replaceChildren(box);
}

/**
 * Render a work unit into root. A malformed document produces an error
 * state and null; nothing of the unit reaches the page in that case.
 */
export function renderWorkUnit(root: HTMLElement, payload: unknown, options: ViewOptions): ViewHandles | null {
  let unit: WorkUnit;
  try {
    unit = parseWorkUnit(payload);
  } catch (err) {
    renderErrorState(root, err instanceof Error ? err.message : String(err));
    return null;
  }
  const doc = root.ownerDocument;
  const session = new MarkingSession(unit);
  const colorBySubtrait = new Map(subtraitOrder(unit).map((sid, i) => [sid, i]));
  let active: string | null = null;

  const container = el(doc, "div", "work-unit");
  const header = el(doc, "header", "unit-header");
  header.appendChild(el(doc, "h1", undefined, unit.item.title || unit.item.id));
  header.appendChild(
    el(doc, "span", "unit-position", `response ${unit.position} of ${unit.total}, read ${unit.read_index}`),
  );
  container.appendChild(header);

  const panes = el(doc, "div", "panes");

  const contextPane = el(doc, "section", "context-pane");
  contextPane.appendChild(el(doc, "h2", undefined, "Prompt"));
  contextPane.appendChild(el(doc, "p", "stimulus", unit.item.stimulus));
  if (unit.item.passages.length > 0) {
    const passagesBox = el(doc, "div", "passages");
    passagesBox.appendChild(el(doc, "h3", undefined, "Passages"));
    for (const passage of unit.item.passages) {
      const block = el(doc, "blockquote", "passage");
      for (const para of splitParagraphs(passage)) {
        block.appendChild(el(doc, "p", undefined, para.text));
      }
      passagesBox.appendChild(block);
    }
    contextPane.appendChild(passagesBox);
  } else {
    contextPane.classList.add("stimulus-only");
  }
  panes.appendChild(contextPane);

  const responsePane = el(doc, "section", "response-pane");
  responsePane.appendChild(el(doc, "h2", undefined, "Response"));
  const responseBody = el(doc, "div", "response-body");
  responsePane.appendChild(responseBody);
  panes.appendChild(responsePane);
  container.appendChild(panes);

  const paragraphs = splitParagraphs(unit.response.text);

  function repaintResponse(): void {
    const layered: { startU16: number; endU16: number; colorIndex: number }[] = [];
    for (const [sid, colorIndex] of colorBySubtrait) {
      for (const span of session.highlights(sid)) {
        layered.push({
          startU16: scalarToUtf16(unit.response.text, span.start),
          endU16: scalarToUtf16(unit.response.text, span.end),
          colorIndex,
        });
      }
    }
    responseBody.replaceChildren(...paragraphs.map((para) => paintParagraph(doc, para, layered)));
  }

  const scoring = el(doc, "section", "scoring");
  const spanLists = new Map<string, HTMLElement>();
  const scoreButtons: { id: string; kind: "trait" | "subtrait"; score: number; button: HTMLButtonElement }[] = [];

  function scoreRow(kind: "trait" | "subtrait", id: string, min: number, max: number): HTMLElement {
    const row = el(doc, "div", "score-row");
    for (let score = min; score <= max; score += 1) {
      const button = el(doc, "button", "sp", String(score));
      button.type = "button";
      button.dataset.target = id;
      button.dataset.score = String(score);
      button.addEventListener("click", () => {
        if (kind === "trait") session.setTraitScore(id, score);
        else session.setSubtraitScore(id, score);
        refresh();
      });
      scoreButtons.push({ id, kind, score, button });
      row.appendChild(button);
    }
    return row;
  }

  for (const trait of unit.traits) {
    const traitBox = el(doc, "div", "trait");
    traitBox.dataset.traitId = trait.id;
    const traitHead = el(doc, "div", "trait-head");
    traitHead.appendChild(el(doc, "h2", undefined, trait.name));
    traitHead.appendChild(scoreRow("trait", trait.id, trait.scale.min, trait.scale.max));
    traitBox.appendChild(traitHead);

    for (const sub of trait.subtraits) {
      traitBox.appendChild(subtraitPanel(sub));
    }
    scoring.appendChild(traitBox);
  }

  function subtraitPanel(sub: SubtraitDoc): HTMLElement {
    const panel = el(doc, "div", "subtrait");
    panel.dataset.subtraitId = sub.id;
    const head = el(doc, "div", "subtrait-head");
    head.appendChild(el(doc, "h3", undefined, sub.name));
    const pick = el(doc, "button", "pick-highlight", "highlight");
    pick.type = "button";
    pick.dataset.subtraitId = sub.id;
    pick.addEventListener("click", () => {
      active = sub.id;
      refresh();
    });
    head.appendChild(pick);
    panel.appendChild(head);
    if (sub.description) panel.appendChild(el(doc, "p", "subtrait-desc", sub.description));
    const rubric = el(doc, "ol", "rubric");
    rubric.setAttribute("start", String(sub.scale.min));
    for (const line of sub.rubric) {
      rubric.appendChild(el(doc, "li", undefined, line));
    }
    panel.appendChild(rubric);
    panel.appendChild(scoreRow("subtrait", sub.id, sub.scale.min, sub.scale.max));
    const list = el(doc, "ul", "span-list");
    spanLists.set(sub.id, list);
    panel.appendChild(list);
    return panel;
  }

  container.appendChild(scoring);

  const footer = el(doc, "footer", "submit-bar");
  const missingNote = el(doc, "span", "missing-note");
  const submitButton = el(doc, "button", "submit", "Submit read");
  submitButton.type = "button";
  submitButton.disabled = true;
  submitButton.addEventListener("click", () => {
    if (!session.canSubmit()) return;
    options.onSubmit(session.toReadBody());
  });
  footer.appendChild(missingNote);
  footer.appendChild(submitButton);
  container.appendChild(footer);

  function repaintSpanLists(): void {
    for (const [sid, list] of spanLists) {
      list.replaceChildren();
      session.highlights(sid).forEach((span, index) => {
        const item = el(doc, "li", "span-entry");
        item.appendChild(el(doc, "span", "span-snapshot", `[${span.start}, ${span.end}) ${span.snapshot}`));
        const remove = el(doc, "button", "remove-span", "remove");
        remove.type = "button";
        remove.addEventListener("click", () => {
          session.removeHighlight(sid, index);
          refresh();
        });
        item.appendChild(remove);
        list.appendChild(item);
      });
    }
  }

  function repaintGate(): void {
    const missing = session.missingScores();
    submitButton.disabled = missing.length > 0;
    missingNote.textContent = missing.length > 0 ? `unscored: ${missing.join(", ")}` : "";
    for (const { id, kind, score, button } of scoreButtons) {
      const current = kind === "trait" ? session.traitScore(id) : session.subtraitScore(id);
      button.classList.toggle("selected", current === score);
    }
    for (const pick of container.querySelectorAll<HTMLElement>(".pick-highlight")) {
      pick.classList.toggle("active", pick.dataset.subtraitId === active);
    }
  }

  function refresh(): void {
    repaintResponse();
    repaintSpanLists();
    repaintGate();
  }

  function captureSelection(): boolean {
    if (active === null) return false;
    const view = doc.defaultView;
    const offsets = captureHighlight(responseBody, unit.response.text, view ? view.getSelection() : null);
    if (offsets === null) return false;
    const added = session.addHighlight(active, offsets.start, offsets.end);
    if (added === null) return false;
    refresh();
    return true;
  }

  responseBody.addEventListener("mouseup", () => {
    captureSelection();
  });

  refresh();
  root.replaceChildren(container);
  return {
    session,
    responsePane: responseBody,
    submitButton,
    activeSubtrait: () => active,
    setActiveSubtrait: (subtraitId: string) => {
      if (!colorBySubtrait.has(subtraitId)) throw new Error(`unknown subtrait ${subtraitId}`);
      active = subtraitId;
      refresh();
    },
    captureSelection,
    refresh,
  };
}
