// Shapes of the service JSON API. The UI never invents state of its own:
// everything rendered comes from these payloads.

export type SourceKind = "articles" | "companies" | "officers" | "web";
export type TabKind = SourceKind | "connections";
export type EntityLabel = "PER" | "ORG" | "LOC" | "MISC";

export const SOURCE_KINDS: SourceKind[] = ["articles", "companies", "officers", "web"];
export const TAB_KINDS: TabKind[] = [...SOURCE_KINDS, "connections"];

export interface DocumentPayload {
    id: string;
    source: string;
    title: string;
    body: string;
    url: string;
    published_at: string | null;
    topic: string | null;
}

export interface TabPayload {
    source: SourceKind;
    items: DocumentPayload[];
    fetched_at: string;
    degraded: boolean;
}

export interface EntityPayload {
    id: string;
    display: string;
    label: EntityLabel;
    score: number;
    docs: string[];
}

export interface EvidencePayload {
    doc: string;
    src: string;
    url: string;
    title: string;
}

export interface LinkPayload {
    source: string;
    target: string;
    weight: number;
    evidence: EvidencePayload[];
    hint: string;
}

export interface NodePayload {
    id: string;
    display: string;
    label: EntityLabel;
    score: number;
    docs: string[];
    queries: string[];
}

export interface GraphPayload {
    nodes: NodePayload[];
    links: LinkPayload[];
}

export interface SessionPayload {
    session_id: string;
    tabs: Record<SourceKind, TabPayload>;
    entities: EntityPayload[];
    graph: GraphPayload;
}

export interface EventBody {
    kind: "tab_view" | "clickthrough";
    payload: { tab?: TabKind; doc_id?: string };
}
