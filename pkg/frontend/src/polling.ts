/** Simple status polling for re-extraction: the file-backed server has no push. */

export interface PollOptions {
  intervalMs?: number;
  maxPolls?: number;
  sleep?: (ms: number) => Promise<void>;
}

const defaultSleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

/**
 * Poll `load` until `done` accepts the value or the poll budget runs out.
 * Resolves with the last loaded value either way.
 */
export async function pollUntil<T>(
  load: () => Promise<T>,
  done: (value: T) => boolean,
  options: PollOptions = {},
): Promise<T> {
  const { intervalMs = 750, maxPolls = 40, sleep = defaultSleep } = options;
  let value = await load();
  let polls = 1;
  while (!done(value) && polls < maxPolls) {
    await sleep(intervalMs);
    value = await load();
    polls += 1;
  }
  return value;
}
