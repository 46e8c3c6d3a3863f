/** Event coalescing: collapse bursts of triggers into one callback per
 * animation frame, so a stream of slider input events costs a single
 * re-render.
 */

export type Scheduler = (cb: () => void) => void;

export function coalesced(
  fn: () => void,
  schedule: Scheduler = (cb) => requestAnimationFrame(() => cb()),
): () => void {
  let pending = false;
  return () => {
    if (pending) {
      return;
    }
    pending = true;
    schedule(() => {
      pending = false;
      fn();
    });
  };
}
