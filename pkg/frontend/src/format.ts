/** Display formatting: every coordinate carries its frame label, angles
 * show in degrees (the wire stays in radians). */

export type Triple = [number, number, number];

export function meters(value: number, decimals = 3): string {
  return `${value.toFixed(decimals)} m`;
}

export function labeledPoint(frame: "camera" | "base", p: Triple): string {
  const coords = p.map((c) => c.toFixed(3)).join(", ");
  return `${frame} (${coords}) m`;
}

export function degrees(radians: number, decimals = 2): string {
  const deg = (radians * 180) / Math.PI;
  const sign = deg > 0 ? "+" : "";
  return `${sign}${deg.toFixed(decimals)}°`;
}

export const NO_DATA = "no data";
