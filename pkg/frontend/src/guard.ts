/** Defence in depth against answer leakage.
 *
 * The service strips side offsets, correct sides, provenance tags and
 * error magnitudes from everything a participant can fetch. The client
 * re-checks every JSON payload it consumes and refuses to proceed if
 * one of those terms appears anywhere, so a server regression cannot
 * silently reach a participant's screen.
 */

export const FORBIDDEN_PAYLOAD_TERMS = [
  "offset",
  "correct_side",
  "provenance",
  "error_ms",
  "model_side",
  "utterance",
] as const;

export class SecretLeakError extends Error {}

/** Throws if any forbidden term appears in the serialised payload. */
export function assertParticipantSafe(payload: unknown, context: string): void {
  const blob = JSON.stringify(payload ?? null).toLowerCase();
  for (const term of FORBIDDEN_PAYLOAD_TERMS) {
    if (blob.includes(term)) {
      throw new SecretLeakError(`${context}: payload contains ${JSON.stringify(term)}`);
    }
  }
}
