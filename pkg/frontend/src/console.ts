// DOM-free core of the search console: keystroke handling with debounce,
// stale-response discarding, completion selection, search submission and
// suggestion-chip re-search. A View implementation renders the state.

import { Api, AutocompleteResponse, SearchResponse } from "./api.js";
import { Debounced, debounce } from "./debounce.js";
import { LatestWins } from "./staleness.js";

export interface UiState {
  prefix: string;
  selected: number; // index into dropdown, -1 = none
  dropdown: AutocompleteResponse | null;
  page: SearchResponse | null;
  error: string | null;
}

export interface View {
  renderDropdown(state: UiState): void;
  renderPage(state: UiState): void;
  renderError(state: UiState): void;
}

export interface ConsoleOptions {
  debounceMs?: number;
  maxCandidates?: number;
  pageSize?: number;
}

export class SearchConsole {
  readonly state: UiState = {
    prefix: "",
    selected: -1,
    dropdown: null,
    page: null,
    error: null,
  };
  private readonly requestAutocomplete: Debounced<[string]>;
  private readonly pending = new LatestWins<AutocompleteResponse>();
  private readonly maxCandidates: number;
  private readonly pageSize: number;

  constructor(private readonly api: Api, private readonly view: View,
              options: ConsoleOptions = {}) {
    this.maxCandidates = options.maxCandidates ?? 8;
    this.pageSize = options.pageSize ?? 10;
    this.requestAutocomplete = debounce(
      (prefix: string) => void this.fetchCompletions(prefix),
      options.debounceMs ?? 80,
    );
  }

  /** Per-keystroke entry point: debounced, tagged with its prefix. */
  onKeystroke(prefix: string): void {
    this.state.prefix = prefix;
    this.state.selected = -1;
    this.requestAutocomplete(prefix);
  }

  private async fetchCompletions(prefix: string): Promise<void> {
    const tag = this.pending.issue(prefix);
    try {
      const resp = await this.api.autocomplete(prefix, this.maxCandidates);
      const fresh = this.pending.accept(tag, resp);
      if (fresh === null) {
        return; // a newer prefix owns the dropdown now
      }
      this.state.dropdown = fresh;
      this.state.error = null;
      this.view.renderDropdown(this.state);
    } catch (err) {
      if (tag === this.pending.activeTag) {
        // network failure: hide the dropdown, never block typing
        this.state.dropdown = null;
        this.view.renderDropdown(this.state);
      }
    }
  }

  moveSelection(delta: number): void {
    const n = this.state.dropdown?.candidates.length ?? 0;
    if (n === 0) {
      return;
    }
    // cycle -1 (nothing selected) -> 0 -> ... -> n-1 -> -1
    this.state.selected = ((this.state.selected + 1 + delta + n + 1) % (n + 1)) - 1;
    this.view.renderDropdown(this.state);
  }

  /** Enter key: submit the selected completion, or the raw prefix. */
  submitSelection(): Promise<void> {
    const chosen = this.state.selected >= 0 && this.state.dropdown
      ? this.state.dropdown.candidates[this.state.selected]?.text
      : undefined;
    return this.submit(chosen ?? this.state.prefix);
  }

  async submit(query: string): Promise<void> {
    this.requestAutocomplete.cancel();
    this.pending.reset();
    this.state.prefix = query;
    this.state.dropdown = null;
    this.state.selected = -1;
    this.view.renderDropdown(this.state);
    try {
      const resp = await this.api.search(query, this.pageSize);
      this.state.page = resp;
      this.state.error = null;
      this.view.renderPage(this.state);
    } catch (err) {
      this.state.error = err instanceof Error ? err.message : String(err);
      this.view.renderError(this.state);
    }
  }

  /** Suggestion chips re-issue a full search for the chip's text. */
  onChipClick(text: string): Promise<void> {
    return this.submit(text);
  }
}
