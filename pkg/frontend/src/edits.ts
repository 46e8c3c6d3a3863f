/** Edit export: the file format the command-line synthesizer accepts.
 *
 * The schema is the decompose sidecar's required subset — a sample id
 * plus a scale vector — so an exported edit can be replayed with
 * `resdecomp synth --sigma-file <file>` to produce the same image the
 * panel is showing.
 */

export function exportEdit(
  sample: number,
  sigma: ArrayLike<number>,
): string {
  const doc = { sample, sigma: Array.from(sigma) };
  return JSON.stringify(doc, null, 2) + "\n";
}

export function exportFilename(sample: number): string {
  return `edit_sample${String(sample).padStart(4, "0")}.json`;
}
