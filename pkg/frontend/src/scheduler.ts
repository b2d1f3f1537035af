/** Debounced, single-flight render scheduling: newest edit wins.

Every edit calls request(), which (re)arms one debounce timer. When the
timer fires, the job runs — unless a run is already in flight, in which
case exactly one follow-up run is queued for when it finishes. The job
receives an isCurrent() probe so it can drop its result if newer edits
arrived while it was running (the queued follow-up will show them).

Consequences, which the tests pin down:
- at most one network request per elapsed debounce window;
- at most one request in flight at any time;
- the last displayed result always reflects the newest edit.
*/

export type RenderJob = (isCurrent: () => boolean) => Promise<void>;

export class RenderScheduler {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private inFlight = false;
  private followUp = false;
  private generation = 0;

  constructor(
    private readonly job: RenderJob,
    readonly debounceMs: number = 150,
  ) {}

  /** Note an edit: schedule a render for one debounce interval from now. */
  request(): void {
    this.generation += 1;
    if (this.timer !== null) {
      clearTimeout(this.timer);
    }
    this.timer = setTimeout(() => {
      this.timer = null;
      this.launch();
    }, this.debounceMs);
  }

  /** Render immediately (initial page load), still single-flight. */
  requestNow(): void {
    this.generation += 1;
    this.launch();
  }

  private launch(): void {
    if (this.inFlight) {
      this.followUp = true;
      return;
    }
    this.inFlight = true;
    const startedAt = this.generation;
    const isCurrent = () => this.generation === startedAt;
    void this.job(isCurrent).finally(() => {
      this.inFlight = false;
      if (this.followUp) {
        this.followUp = false;
        this.launch();
      }
    });
  }
}
