/**
 * Display colors for the agreement bands. Band LABELS always come from the
 * backend; the client only maps a label to a color and never re-derives a
 * band from a kappa value.
 */

export const BAND_COLORS: Record<string, string> = {
  "Less than chance agreement": "#c0392b",
  "Slight agreement": "#e67e22",
  "Fair agreement": "#f1c40f",
  "Moderate agreement": "#9acd32",
  "Substantial agreement": "#27ae60",
  "Almost perfect agreement": "#1e8449",
};

export function bandColor(band: string): string {
  return BAND_COLORS[band] ?? "#7f8c8d";
}
