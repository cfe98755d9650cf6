// DOM glue: binds SearchConsole to the page and delegates all drawing to the
// pure renderers.

import { HttpApi } from "./api.js";
import { SearchConsole, UiState, View } from "./console.js";
import {
  renderChips,
  renderDropdownList,
  renderIntentBars,
  renderResults,
  renderTagSpans,
  renderTimings,
} from "./render.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing #${id}`);
  }
  return node as T;
}

class DomView implements View {
  renderDropdown(state: UiState): void {
    const dropdown = el<HTMLUListElement>("dropdown");
    const candidates = state.dropdown?.candidates ?? [];
    dropdown.innerHTML = renderDropdownList(candidates, state.selected);
    dropdown.style.display = candidates.length ? "block" : "none";
  }

  renderPage(state: UiState): void {
    const page = state.page;
    if (!page) {
      return;
    }
    el("results").innerHTML = renderResults(page);
    el("chips").innerHTML = renderChips(page);
    el("intent").innerHTML = renderIntentBars(page);
    el("tags").innerHTML = renderTagSpans(page.query, page.tags);
    el("timings").innerHTML = renderTimings(page);
    el("error").textContent = "";
  }

  renderError(state: UiState): void {
    el("error").textContent = state.error ?? "";
  }
}

function start(): void {
  const console_ = new SearchConsole(new HttpApi(""), new DomView(), {
    debounceMs: 80,
  });
  const input = el<HTMLInputElement>("query");
  input.addEventListener("input", () => console_.onKeystroke(input.value));
  input.addEventListener("keydown", (ev) => {
    if (ev.key === "ArrowDown") {
      ev.preventDefault();
      console_.moveSelection(1);
    } else if (ev.key === "ArrowUp") {
      ev.preventDefault();
      console_.moveSelection(-1);
    } else if (ev.key === "Enter") {
      ev.preventDefault();
      void console_.submitSelection().then(() => {
        input.value = console_.state.prefix;
      });
    } else if (ev.key === "Escape") {
      console_.state.dropdown = null;
      new DomView().renderDropdown(console_.state);
    }
  });
  el("dropdown").addEventListener("click", (ev) => {
    const target = (ev.target as HTMLElement).closest(".candidate");
    if (target instanceof HTMLElement && target.dataset.text) {
      input.value = target.dataset.text;
      void console_.submit(target.dataset.text);
    }
  });
  el("chips").addEventListener("click", (ev) => {
    const chip = (ev.target as HTMLElement).closest(".chip");
    if (chip instanceof HTMLElement && chip.dataset.query) {
      input.value = chip.dataset.query;
      void console_.onChipClick(chip.dataset.query);
    }
  });
  el<HTMLButtonElement>("go").addEventListener("click", () => {
    void console_.submit(input.value);
  });
}

document.addEventListener("DOMContentLoaded", start);
