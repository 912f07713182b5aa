/**
 * Minimal specimen search page over /api/specimens: filter fields, a
 * result table, and links into the per-specimen viewer.
 */

interface SpecimenRow {
  specimen_id: string;
  cancer_type: string;
  stain: string;
  biomarkers: Record<string, string>;
  matched: boolean;
  dzi_url?: string;
}

interface SearchResponse {
  total: number;
  offset: number;
  limit: number;
  items: SpecimenRow[];
}

export function buildQuery(
  cancerType: string,
  stain: string,
  biomarkers: string,
  matchedOnly: boolean,
  offset = 0,
): string {
  const params = new URLSearchParams();
  if (cancerType) params.set("cancer_type", cancerType);
  if (stain) params.set("stain", stain);
  for (const token of biomarkers.split(";")) {
    if (token.trim()) params.append("biomarker", token.trim());
  }
  if (matchedOnly) params.set("matched_only", "true");
  if (offset) params.set("offset", String(offset));
  return `/api/specimens?${params.toString()}`;
}

export function mountSearch(root: HTMLElement): void {
  root.innerHTML = `
    <h1>Specimen search</h1>
    <form id="criteria">
      <input name="cancer_type" placeholder="cancer type">
      <input name="stain" placeholder="stain">
      <input name="biomarkers" placeholder="biomarkers, e.g. ER=positive;PR=negative">
      <label><input type="checkbox" name="matched_only" checked> with images only</label>
      <button type="submit">Search</button>
    </form>
    <p id="status"></p>
    <table id="results" border="1" cellpadding="4"></table>
  `;
  const form = root.querySelector("#criteria") as HTMLFormElement;
  const status = root.querySelector("#status") as HTMLElement;
  const table = root.querySelector("#results") as HTMLTableElement;

  async function run(): Promise<void> {
    const data = new FormData(form);
    const url = buildQuery(
      String(data.get("cancer_type") ?? ""),
      String(data.get("stain") ?? ""),
      String(data.get("biomarkers") ?? ""),
      data.get("matched_only") !== null,
    );
    status.textContent = "searching...";
    const response = await fetch(url);
    if (!response.ok) {
      status.textContent = `search failed: ${response.status}`;
      return;
    }
    const page: SearchResponse = await response.json();
    status.textContent = `${page.total} specimens`;
    table.innerHTML =
      "<tr><th>id</th><th>cancer type</th><th>stain</th>" +
      "<th>biomarkers</th><th>image</th></tr>";
    for (const row of page.items) {
      const tr = document.createElement("tr");
      const markers = Object.entries(row.biomarkers)
        .map(([marker, value]) => `${marker}=${value}`)
        .join("; ");
      const link = row.matched
        ? `<a href="/view/${row.specimen_id}">view</a>`
        : "";
      tr.innerHTML =
        `<td>${row.specimen_id}</td><td>${row.cancer_type}</td>` +
        `<td>${row.stain}</td><td>${markers}</td><td>${link}</td>`;
      table.appendChild(tr);
    }
  }

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    void run();
  });
  void run();
}
