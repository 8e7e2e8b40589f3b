/** Work unit documents shared by the unit tests. */

export function rubricLines(): string[] {
  return ["none of it", "some of it", "most of it", "all of it"];
}

export function unitDoc(): Record<string, unknown> {
  const sub = (id: string, name: string) => ({
    id,
    name,
    description: `${name} quality`,
    scale: { min: 0, max: 3 },
    rubric: rubricLines(),
  });
  return {
    response_id: "r-1",
    read_index: 1,
    position: 1,
    total: 4,
    tree_version: "t-1",
    item: {
      id: "item-1",
      title: "Energy sources",
      stimulus: "Explain which energy source the town should pick.",
      passages: ["Wind power needs open land.", "Solar panels work on rooftops."],
    },
    response: { id: "r-1", text: "Solar is best.\nIt fits our roofs.\n\nWind needs space we lack." },
    traits: [
      {
        id: "organization",
        name: "Organization",
        scale: { min: 0, max: 3 },
        subtraits: [sub("intro", "Introduction"), sub("order", "Ordering")],
      },
      {
        id: "language",
        name: "Language",
        scale: { min: 0, max: 3 },
        subtraits: [sub("vocab", "Vocabulary"), sub("style", "Style")],
      },
    ],
  };
}

export const ALL_SUBTRAITS = ["intro", "order", "vocab", "style"];
export const ALL_TRAITS = ["organization", "language"];
