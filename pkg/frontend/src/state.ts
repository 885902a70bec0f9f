/**
 * Editor state: source/reference images, per-attribute toggles and blend
 * sliders, result panes, and the fingerprint that produced them. Pure data
 * plus change notification; no DOM and no network in here.
 */

export interface ImageRef {
  /** data URL for display */
  dataUrl: string;
  label: string;
}

export interface ResultPanes {
  imageC: string;
  imageD: string;
  residualC: string;
  residualD: string;
  /** service fingerprint the results were computed under */
  fingerprint: string;
}

export interface AttributeRow {
  name: string;
  enabled: boolean;
  alpha: number;
  /** exemplar for this attribute; the active reference by default */
  ref: ImageRef | null;
}

export type Listener = () => void;

export function clampAlpha(value: number): number {
  if (Number.isNaN(value)) return 0;
  return Math.min(1, Math.max(0, value));
}

export class EditorState {
  source: ImageRef | null = null;
  reference: ImageRef | null = null;
  gallery: ImageRef[] = [];
  attributes: AttributeRow[] = [];
  results: ResultPanes | null = null;
  requestInFlight = false;
  serviceFingerprint = "";

  private listeners: Listener[] = [];

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  notify(): void {
    for (const listener of this.listeners) listener();
  }

  setAttributes(names: string[]): void {
    this.attributes = names.map((name) => ({ name, enabled: false, alpha: 1, ref: null }));
    this.notify();
  }

  setSource(image: ImageRef): void {
    this.source = image;
    this.notify();
  }

  setReference(image: ImageRef): void {
    this.reference = image;
    for (const row of this.attributes) {
      row.ref = image;
    }
    this.notify();
  }

  addToGallery(image: ImageRef): void {
    this.gallery.push(image);
    this.notify();
  }

  toggleAttribute(index: number, enabled: boolean): void {
    const row = this.attributes[index];
    if (!row) return;
    row.enabled = enabled;
    if (enabled && row.ref === null) row.ref = this.reference;
    this.notify();
  }

  setAlpha(index: number, alpha: number): void {
    const row = this.attributes[index];
    if (!row) return;
    row.alpha = clampAlpha(alpha);
    this.notify();
  }

  /** Indices + alphas of the toggled attributes, in attribute order. */
  enabledSelection(): { indices: number[]; alphas: number[] } {
    const indices: number[] = [];
    const alphas: number[] = [];
    this.attributes.forEach((row, k) => {
      if (row.enabled) {
        indices.push(k);
        alphas.push(clampAlpha(row.alpha));
      }
    });
    return { indices, alphas };
  }

  setResults(panes: ResultPanes | null): void {
    this.results = panes;
    this.notify();
  }
}
