// Console state: record cache, poll cursor, and the badge ledger.
//
// Freshness is what this console has actually observed: a record starts
// UNSYNCED when entered here and is promoted only by peer acknowledgments
// (a POST response, or the record appearing in the peer's delta), to the
// state the peer's tier implies. Promotion never lowers a badge, and a
// badge is never shown above what some server acknowledged.

import { ApiClient, OfflineError } from "./api.js";
import type { Freshness, RecordDoc, TierName } from "./types.js";
import { impliedFreshness, maxFreshness } from "./types.js";

export interface ConsoleSnapshot {
  records: RecordDoc[]; // in arrival order
  freshness: Map<string, Freshness>;
  offline: boolean;
  cursor: number;
  peerTier: TierName | null;
}

export class ConsoleStore {
  private records = new Map<string, RecordDoc>();
  private order: string[] = [];
  private freshness = new Map<string, Freshness>();
  private outbox: RecordDoc[] = [];
  private cursor = 0;
  private peer: ApiClient | null = null;
  private peerTier: TierName | null = null;
  offline = false;

  /** Point the console at a peer; switching resets the cursor and re-pulls. */
  async connect(peer: ApiClient): Promise<void> {
    const switching = this.peer !== null && this.peer.baseUrl !== peer.baseUrl;
    this.peer = peer;
    if (switching || this.peerTier === null) {
      this.cursor = 0;
    }
    try {
      this.peerTier = (await peer.healthz()).tier;
      this.offline = false;
    } catch (err) {
      if (err instanceof OfflineError) {
        this.offline = true;
        return;
      }
      throw err;
    }
  }

  get tier(): TierName | null {
    return this.peerTier;
  }

  snapshot(): ConsoleSnapshot {
    return {
      records: this.order.map((id) => this.records.get(id)!),
      freshness: new Map(this.freshness),
      offline: this.offline,
      cursor: this.cursor,
      peerTier: this.peerTier,
    };
  }

  freshnessOf(id: string): Freshness | undefined {
    return this.freshness.get(id);
  }

  private add(doc: RecordDoc): void {
    if (!this.records.has(doc.id)) {
      this.records.set(doc.id, doc);
      this.order.push(doc.id);
    }
  }

  private promote(id: string, state: Freshness): void {
    const current = this.freshness.get(id) ?? "UNSYNCED";
    this.freshness.set(id, maxFreshness(current, state));
  }

  /** Enter a record locally (red) and try to push it to the peer. */
  async submit(doc: RecordDoc): Promise<void> {
    this.add(doc);
    this.freshness.set(doc.id, this.freshness.get(doc.id) ?? "UNSYNCED");
    this.outbox.push(doc);
    await this.flushOutbox();
  }

  private async flushOutbox(): Promise<void> {
    if (!this.peer || this.peerTier === null || this.outbox.length === 0) {
      return;
    }
    const pending = [...this.outbox];
    try {
      const ack = await this.peer.postRecords(pending);
      this.outbox = [];
      const state = impliedFreshness(this.peerTier);
      for (const id of [...ack.accepted_ids, ...ack.known_ids]) {
        this.promote(id, state);
      }
      this.offline = false;
    } catch (err) {
      if (err instanceof OfflineError) {
        this.offline = true; // records stay red, retried on the next poll
        return;
      }
      throw err;
    }
  }

  /**
   * One poll cycle: retry pending submissions, pull the peer's delta, merge
   * it into the cache, and recolor badges for everything the peer holds.
   * Network failure keeps all state and just flags the console offline.
   */
  async poll(): Promise<void> {
    if (!this.peer) return;
    if (this.peerTier === null) {
      await this.connect(this.peer);
      if (this.peerTier === null) return;
    }
    await this.flushOutbox();
    try {
      const delta = await this.peer.records(this.cursor);
      const state = impliedFreshness(this.peerTier);
      for (const doc of delta.records) {
        this.add(doc);
        this.promote(doc.id, state);
      }
      this.cursor = delta.cursor;
      this.offline = false;
    } catch (err) {
      if (err instanceof OfflineError) {
        this.offline = true;
        return;
      }
      throw err;
    }
  }
}
