/** Run-length mask codec matching the server: row-major runs alternating
 * background/foreground, starting with a (possibly zero-length) 0-run. */

export function rleToMask(runs: number[], height: number, width: number): Uint8Array {
  const total = height * width;
  const mask = new Uint8Array(total);
  let pos = 0;
  let value = 0;
  for (const run of runs) {
    if (run < 0) throw new Error("negative run length");
    if (value === 1) mask.fill(1, pos, pos + run);
    pos += run;
    value ^= 1;
  }
  if (pos !== total) {
    throw new Error(`runs cover ${pos} pixels, mask has ${total}`);
  }
  return mask;
}

export function maskArea(mask: Uint8Array): number {
  let total = 0;
  for (const v of mask) total += v;
  return total;
}

export function maskToRle(mask: Uint8Array): number[] {
  const runs: number[] = [];
  let current = 0;
  let run = 0;
  for (const v of mask) {
    if (v === current) {
      run += 1;
    } else {
      runs.push(run);
      current = v;
      run = 1;
    }
  }
  runs.push(run);
  return runs;
}
