// SVG sparkline geometry for telemetry traces. Boolean signals render as
// step lines; numeric signals scale into the box.

export interface SparkSample {
  at: number;
  value: number | boolean;
}

export function sparklinePoints(
  samples: SparkSample[],
  width: number,
  height: number,
  pad = 2,
): string {
  if (samples.length === 0) return "";
  const numeric = samples.map((s) => ({
    at: s.at,
    value: typeof s.value === "boolean" ? (s.value ? 1 : 0) : s.value,
  }));
  const t0 = numeric[0].at;
  const t1 = numeric[numeric.length - 1].at;
  const span = t1 - t0 || 1;
  let low = Math.min(...numeric.map((s) => s.value));
  let high = Math.max(...numeric.map((s) => s.value));
  if (low === high) {
    low -= 1;
    high += 1;
  }
  const sx = (at: number) => pad + ((at - t0) / span) * (width - 2 * pad);
  const sy = (value: number) => height - pad - ((value - low) / (high - low)) * (height - 2 * pad);

  const points: string[] = [];
  let lastY: number | null = null;
  for (const sample of numeric) {
    const x = round2(sx(sample.at));
    const y = round2(sy(sample.value));
    if (lastY !== null && lastY !== y) {
      points.push(`${x},${lastY}`); // step transition
    }
    points.push(`${x},${y}`);
    lastY = y;
  }
  return points.join(" ");
}

function round2(value: number): number {
  return Math.round(value * 100) / 100;
}
