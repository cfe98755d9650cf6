// Latest-wins request tagging: responses are tagged with the prefix they were
// issued for and only the response matching the current tag may render, no
// matter the order replies arrive in.

export class LatestWins<T> {
  private current: string | null = null;

  issue(tag: string): string {
    this.current = tag;
    return tag;
  }

  /** Returns the payload when the tag is still current, otherwise null. */
  accept(tag: string, payload: T): T | null {
    return tag === this.current ? payload : null;
  }

  reset(): void {
    this.current = null;
  }

  get activeTag(): string | null {
    return this.current;
  }
}
