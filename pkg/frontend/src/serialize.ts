/**
 * Canonical request serialization.
 *
 * The canonical string of a request fragment identifies a draft: it is
 * attached to each request as `client_token`, echoed by the service, and
 * used to discard stale responses after rapid control changes.
 */

export type Json =
  | string
  | number
  | boolean
  | null
  | Json[]
  | { [key: string]: Json };

export function canonicalStringify(value: Json): string {
  if (value === null || typeof value !== "object") {
    return JSON.stringify(value);
  }
  if (Array.isArray(value)) {
    return "[" + value.map(canonicalStringify).join(",") + "]";
  }
  const keys = Object.keys(value).sort();
  const body = keys
    .filter((k) => value[k] !== undefined)
    .map((k) => JSON.stringify(k) + ":" + canonicalStringify(value[k] as Json))
    .join(",");
  return "{" + body + "}";
}
