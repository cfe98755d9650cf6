// Pure HTML builders: everything displayed comes straight out of a service
// response. Kept free of document access so tests can assert on strings.

import { ResultDoc, SearchResponse, TagSpan } from "./api.js";

const TAG_COLORS: Record<string, string> = {
  first_name: "#7b5cd6", last_name: "#7b5cd6", company: "#2b7de9",
  school: "#0f9d58", geo: "#e8710a", title: "#c5221f", skill: "#0b8043",
};

export function escapeHtml(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function highlightField(text: string, queryTokens: Set<string>): string {
  return text.split(/\s+/).filter(Boolean).map((word) => {
    const clean = word.toLowerCase().replace(/[^\p{L}\p{N}]+/gu, "");
    const safe = escapeHtml(word);
    return queryTokens.has(clean) ? `<mark>${safe}</mark>` : safe;
  }).join(" ");
}

export function renderResult(doc: ResultDoc, queryTokens: Set<string>): string {
  const fields = Object.entries(doc.fields).map(([name, value]) =>
    `<div class="field"><span class="field-name">${escapeHtml(name)}</span> ` +
    `${highlightField(value, queryTokens)}</div>`).join("");
  return `<li class="result" data-doc="${doc.doc_id}">` +
    `<span class="vertical ${escapeHtml(doc.vertical)}">${escapeHtml(doc.vertical)}</span>` +
    `<span class="score">${doc.score.toFixed(3)}</span>${fields}</li>`;
}

export function renderResults(resp: SearchResponse): string {
  const tokens = new Set(resp.query.toLowerCase().split(/\s+/).filter(Boolean));
  if (resp.results.length === 0) {
    return `<p class="empty">no results</p>`;
  }
  return `<ul class="results">${resp.results.map((d) => renderResult(d, tokens)).join("")}</ul>`;
}

export function renderChips(resp: SearchResponse): string {
  if (resp.suggestions.length === 0) {
    return "";
  }
  const chips = resp.suggestions.map((s) =>
    `<button class="chip" data-query="${escapeHtml(s.text)}">${escapeHtml(s.text)}</button>`);
  return `<div class="chips"><span>people also search for</span>${chips.join("")}</div>`;
}

export function renderIntentBars(resp: SearchResponse): string {
  const rows = Object.entries(resp.intent)
    .sort((a, b) => b[1] - a[1])
    .map(([vertical, p]) =>
      `<div class="intent-row"><span class="intent-label">${escapeHtml(vertical)}</span>` +
      `<div class="intent-bar" style="width:${(p * 100).toFixed(1)}%"></div>` +
      `<span class="intent-value">${(p * 100).toFixed(1)}%</span></div>`);
  return `<div class="intent-bars">${rows.join("")}</div>`;
}

export function renderTagSpans(query: string, tags: TagSpan[]): string {
  const tokens = query.split(/\s+/).filter(Boolean);
  const spanOf = new Map<number, TagSpan>();
  for (const tag of tags) {
    for (let i = tag.start; i < tag.end; i++) {
      spanOf.set(i, tag);
    }
  }
  const parts = tokens.map((tok, i) => {
    const tag = spanOf.get(i);
    if (!tag) {
      return escapeHtml(tok);
    }
    const color = TAG_COLORS[tag.type] ?? "#666";
    const label = i === tag.start ? `<sub>${escapeHtml(tag.type)}</sub>` : "";
    return `<span class="tag" style="border-color:${color}">${escapeHtml(tok)}${label}</span>`;
  });
  return `<div class="tag-spans">${parts.join(" ")}</div>`;
}

export function renderDropdownList(candidates: { text: string }[],
                                   selected: number): string {
  return candidates.map((c, i) =>
    `<li class="${i === selected ? "candidate selected" : "candidate"}" ` +
    `data-text="${escapeHtml(c.text)}">${escapeHtml(c.text)}</li>`).join("");
}

export function renderTimings(resp: SearchResponse): string {
  const rows = Object.entries(resp.timings_us).sort()
    .map(([k, v]) => `<tr><td>${escapeHtml(k)}</td><td>${v}us</td></tr>`);
  const note = resp.suggestions_timed_out
    ? `<p class="note">suggestions missed the deadline</p>` : "";
  return `<table class="timings">${rows.join("")}</table>${note}`;
}
