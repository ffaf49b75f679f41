/**
 * Shareable URL fragment: encodes the pasted text plus the selected span ids
 * so a workbench session is reconstructable from the link alone.
 */

export interface FragmentState {
  text: string;
  selected: number[];
}

function toBase64Url(bytes: Uint8Array): string {
  let binary = "";
  for (const b of bytes) binary += String.fromCharCode(b);
  return btoa(binary).replace(/\+/g, "-").replace(/\//g, "_").replace(/=+$/, "");
}

function fromBase64Url(encoded: string): Uint8Array {
  const base64 = encoded.replace(/-/g, "+").replace(/_/g, "/");
  const padded = base64 + "=".repeat((4 - (base64.length % 4)) % 4);
  const binary = atob(padded);
  const bytes = new Uint8Array(binary.length);
  for (let i = 0; i < binary.length; i++) bytes[i] = binary.charCodeAt(i);
  return bytes;
}

export function encodeFragment(state: FragmentState): string {
  const payload = JSON.stringify({
    t: state.text,
    s: [...state.selected].sort((a, b) => a - b),
  });
  return "d=" + toBase64Url(new TextEncoder().encode(payload));
}

export function decodeFragment(fragment: string): FragmentState | null {
  const raw = fragment.startsWith("#") ? fragment.slice(1) : fragment;
  if (!raw.startsWith("d=")) return null;
  try {
    const payload = JSON.parse(
      new TextDecoder().decode(fromBase64Url(raw.slice(2))),
    );
    if (typeof payload.t !== "string" || !Array.isArray(payload.s)) return null;
    const selected = payload.s.filter((v: unknown) => Number.isInteger(v));
    return { text: payload.t, selected };
  } catch {
    return null;
  }
}
